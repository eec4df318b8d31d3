// Copyright 2026 The Entity Framing Authors.
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

#include <filesystem>
#include <memory>
#include <string>

#include "framing/service.hpp"

namespace httplib {
class Server;
}

namespace framing {

// JSON routes over an AnalysisService, plus GET /taxonomy and, when a static
// directory is given, the browser client's assets at "/".
class HttpServer {
 public:
  explicit HttpServer(AnalysisService& service, std::filesystem::path static_dir = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds to `port`, or any free port when 0. Returns the bound port, -1 on failure.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  std::unique_ptr<httplib::Server> server_;
  AnalysisService& service_;
};

}  // namespace framing
