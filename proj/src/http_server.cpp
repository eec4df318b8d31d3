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

#include "framing/http_server.hpp"

#include <sstream>

#include "httplib.h"
#include "json.hpp"

#include "framing/taxonomy.hpp"

namespace framing {
using nlohmann::json;

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Maps library exceptions onto status codes so handlers can stay linear.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ServiceError& e) {
      send_json(res, {{"error", e.what()}}, e.status());
    } catch (const ValidationError& e) {
      send_json(res, {{"error", e.what()}}, 400);
    } catch (const json::exception& e) {
      send_json(res, {{"error", std::string("malformed request: ") + e.what()}}, 400);
    } catch (const std::exception& e) {
      send_json(res, {{"error", e.what()}}, 500);
    }
  };
}

std::vector<std::string> file_list(const httplib::Request& req) {
  std::vector<std::string> out;
  if (!req.has_param("files")) return out;
  std::stringstream ss(req.get_param_value("files"));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string required(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) throw ServiceError(400, std::string("missing query parameter: ") + name);
  return req.get_param_value(name);
}

bool parse_flag(const std::string& v) { return v == "1" || v == "true" || v == "yes"; }

double parse_confidence(const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ServiceError(400, "min_confidence must be a number");
}

}  // namespace

Fetcher http_fetcher(std::chrono::seconds timeout) {
  return [timeout](const std::string& url) -> std::string {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ServiceError(400, "URL needs an http(s) scheme");
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ServiceError(400, "unsupported URL scheme: " + scheme);
    const std::size_t path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    if (!client.is_valid()) throw ServiceError(502, "cannot fetch " + url);
    client.set_follow_location(true);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    auto res = client.Get(path);
    if (!res) throw ServiceError(502, "cannot fetch " + url + ": " + httplib::to_string(res.error()));
    if (res->status >= 400) {
      throw ServiceError(502, "fetching " + url + " returned HTTP " + std::to_string(res->status));
    }
    return res->body;
  };
}

HttpServer::HttpServer(AnalysisService& service, std::filesystem::path static_dir)
    : server_(std::make_unique<httplib::Server>()), service_(service) {
  auto& s = *server_;
  AnalysisService& svc = service_;

  s.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"status", "ok"}});
  }));
  s.Get("/taxonomy", guarded([](const httplib::Request&, httplib::Response& res) {
    res.set_content(taxonomy_json(), "application/json");
  }));
  s.Post("/sessions", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"id", svc.create_session()}}, 201);
  }));
  s.Post(R"(/sessions/([^/]+)/articles)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    if (req.body.empty()) throw ServiceError(400, "request body is empty");
    const json body = json::parse(req.body);
    if (!body.is_object()) throw ServiceError(400, "request body must be a JSON object");
    IngestRequest in;
    in.text = body.value("text", "");
    in.url = body.value("url", "");
    in.filename = body.value("filename", "");
    in.language = body.value("language", "");
    const StoredArticle a = svc.ingest(req.matches[1], in);
    json out = svc.get_annotations(a.session_id, a.filename);
    out["session_id"] = a.session_id;
    send_json(res, out, 201);
  }));
  s.Get(R"(/sessions/([^/]+)/articles)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.list_articles(req.matches[1]));
  }));
  s.Get(R"(/sessions/([^/]+)/articles/([^/]+)/annotations)",
        guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          AnnotationQuery q;
          if (req.has_param("min_confidence")) q.min_confidence = parse_confidence(req.get_param_value("min_confidence"));
          if (req.has_param("hide_repeats")) q.hide_repeats = parse_flag(req.get_param_value("hide_repeats"));
          send_json(res, svc.get_annotations(req.matches[1], req.matches[2], q));
        }));
  s.Get(R"(/sessions/([^/]+)/sentences)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.sentences_for_label(req.matches[1], file_list(req), required(req, "label")));
  }));
  s.Get(R"(/sessions/([^/]+)/search)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.search(req.matches[1], file_list(req), required(req, "q")));
  }));
  s.Get(R"(/sessions/([^/]+)/graph)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.aggregate_graph(req.matches[1], file_list(req)));
  }));
  s.Get(R"(/sessions/([^/]+)/timeline)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.timeline(req.matches[1], required(req, "file"), required(req, "entity")));
  }));
  s.Get(R"(/sessions/([^/]+)/compare)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.compare(req.matches[1], file_list(req)));
  }));

  if (!static_dir.empty()) {
    if (!s.set_mount_point("/", static_dir.string())) {
      throw std::invalid_argument("static directory does not exist: " + static_dir.string());
    }
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

void HttpServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace framing
