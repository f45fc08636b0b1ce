// Copyright 2026-present the wipcast project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include "wipcast/agents.hpp"
#include "wipcast/config.hpp"
#include "wipcast/csv.hpp"
#include "wipcast/embedding.hpp"
#include "wipcast/error.hpp"
#include "wipcast/eval.hpp"
#include "wipcast/eventlog.hpp"
#include "wipcast/http.hpp"
#include "wipcast/llm.hpp"
#include "wipcast/memory.hpp"
#include "wipcast/narrative.hpp"
#include "wipcast/report.hpp"
#include "wipcast/time.hpp"
#include "wipcast/wipseries.hpp"
#include "wipcast/xml.hpp"
