// Copyright 2026 The tabsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "tabsense/error.hpp"
#include "tabsense/gateway.hpp"

namespace tabsense {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must be an http(s) URL: " + url);
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported endpoint scheme: " + scheme);
  auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  return e;
}

class HttpTransport : public Transport {
 public:
  HttpTransport(const std::string& endpoint, std::string api_key, double timeout_s)
      : endpoint_(split_url(endpoint)), api_key_(std::move(api_key)), timeout_s_(timeout_s) {}

  HttpResponse post_json(const std::string& body) override {
    // httplib clients are not safe to share across threads; one per call.
    httplib::Client cli(endpoint_.origin);
    auto secs = static_cast<time_t>(timeout_s_);
    cli.set_connection_timeout(secs, 0);
    cli.set_read_timeout(secs, 0);
    cli.set_write_timeout(secs, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = cli.Post(endpoint_.path, headers, body, "application/json");
    if (!res) throw GatewayError("request to " + endpoint_.origin + " failed: " + httplib::to_string(res.error()));
    HttpResponse out;
    out.status = res->status;
    out.body = res->body;
    if (res->has_header("Retry-After")) {
      const std::string v = res->get_header_value("Retry-After");
      char* end = nullptr;
      double s = std::strtod(v.c_str(), &end);
      if (end != v.c_str() && s >= 0) out.retry_after_s = s;
    }
    return out;
  }

 private:
  Endpoint endpoint_;
  std::string api_key_;
  double timeout_s_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(const std::string& endpoint, const std::string& api_key,
                                               double timeout_s) {
  return std::make_shared<HttpTransport>(endpoint, api_key, timeout_s);
}

}  // namespace tabsense
