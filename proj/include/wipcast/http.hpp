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

// JSON-over-HTTP POST with timeouts and retries, shared by the remote chat
// and embedding providers.

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "wipcast/error.hpp"

namespace wipcast {

/// Base of all provider transport failures. `attempts` counts requests made.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, int attempts) : Error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

class TimeoutError : public BackendError {
 public:
  using BackendError::BackendError;
};

class HttpStatusError : public BackendError {
 public:
  HttpStatusError(const std::string& what, int attempts, int status)
      : BackendError(what, attempts), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class MalformedResponse : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Raised once every retry has failed.
class BackendUnavailable : public BackendError {
 public:
  using BackendError::BackendError;
};

struct HttpOptions {
  std::chrono::milliseconds timeout{60'000};
  int retries = 2;
  std::chrono::milliseconds backoff_base{1'000};
  /// Environment variable holding a bearer token; unset or empty means none.
  std::string api_key_env = "WIPCAST_API_KEY";
};

struct Url {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/v1/chat/completions"

  static Url parse(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    Url u;
    u.scheme_host_port = url.substr(0, path_start);
    u.path = path_start == std::string::npos ? "/" : url.substr(path_start);
    return u;
  }
};

namespace detail {

inline nlohmann::json post_json_once(const Url& url, const nlohmann::json& body, const HttpOptions& opt,
                                     int attempt) {
  httplib::Client client(url.scheme_host_port);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opt.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opt.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!opt.api_key_env.empty()) {
    if (const char* key = std::getenv(opt.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const std::string msg = "request to " + url.scheme_host_port + url.path + " failed: " + httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw TimeoutError(msg, attempt);
    }
    throw TransportError(msg, attempt);
  }
  if (res->status < 200 || res->status >= 300) {
    throw HttpStatusError("HTTP " + std::to_string(res->status) + " from " + url.path + ": " + res->body.substr(0, 200),
                          attempt, res->status);
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("response is not JSON: ") + e.what(), attempt);
  }
}

}  // namespace detail

/// POSTs `body` and returns the parsed JSON response. Every failure is
/// retried `opt.retries` times with exponential backoff; then
/// BackendUnavailable is thrown carrying the total attempt count.
/// `validate` may throw MalformedResponse to reject a well-formed but
/// unusable payload, which is retried the same way.
template <typename Validate>
auto post_json(const std::string& endpoint, const nlohmann::json& body, const HttpOptions& opt, Validate validate) {
  const Url url = Url::parse(endpoint);
  const int total = opt.retries + 1;
  std::string last;
  for (int attempt = 1; attempt <= total; ++attempt) {
    try {
      return validate(detail::post_json_once(url, body, opt, attempt));
    } catch (const BackendError& e) {
      last = e.what();
    } catch (const nlohmann::json::exception& e) {
      last = std::string("unexpected response layout: ") + e.what();
    }
    if (attempt < total) std::this_thread::sleep_for(opt.backoff_base * (1 << (attempt - 1)));
  }
  throw BackendUnavailable("backend unavailable after " + std::to_string(total) + " attempts: " + last, total);
}

}  // namespace wipcast
