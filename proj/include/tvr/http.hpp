#pragma once

// HTTP binding of the test service.

#include <filesystem>
#include <string>

#include <httplib.h>

#include "tvr/service.hpp"

namespace tvr {

inline constexpr const char* kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>tvr</title></head>
<body><h1>tvr test service</h1>
<p>No web UI is installed. The JSON API lives under <code>/api</code>; see <code>/api/health</code>.</p>
</body></html>
)";

namespace detail {

inline void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ServiceError& e) {
      send_json(res, e.to_json(), e.status());
    } catch (const json::exception& e) {
      send_json(res, ServiceError(400, "invalid_json", e.what()).to_json(), 400);
    } catch (const std::exception& e) {
      send_json(res, ServiceError(500, "internal", e.what()).to_json(), 500);
    }
  };
}

inline json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

}  // namespace detail

/// Registers the API routes and static hosting of `static_dir` (a placeholder
/// page is served at / when it is empty or missing).
inline void mount(httplib::Server& server, Service& service, const std::filesystem::path& static_dir = {}) {
  using detail::guarded;
  using detail::send_json;

  server.Get("/api/health", guarded([&](const httplib::Request&, httplib::Response& res) {
               send_json(res, service.health());
             }));

  server.Post("/api/session", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const auto body = detail::parse_body(req);
                if (!body.is_object()) throw ServiceError(400, "invalid_body", "expected {name, setting, count}");
                const auto name = body.value("name", std::string());
                const auto setting = body.value("setting", std::string());
                if (!body.contains("count") || !body["count"].is_number_integer()) {
                  throw ServiceError(400, "invalid_count", "count must be an integer");
                }
                std::optional<std::uint64_t> seed;
                if (body.contains("seed")) {
                  if (!body["seed"].is_number_unsigned()) {
                    throw ServiceError(400, "invalid_seed", "seed must be a non-negative integer");
                  }
                  seed = body["seed"].get<std::uint64_t>();
                }
                send_json(res, service.create_session(name, setting, body["count"].get<std::int64_t>(), seed), 201);
              }));

  server.Get("/api/session/:id", guarded([&](const httplib::Request& req, httplib::Response& res) {
               send_json(res, service.describe(req.path_params.at("id")));
             }));

  server.Get("/api/session/:id/next", guarded([&](const httplib::Request& req, httplib::Response& res) {
               send_json(res, service.next_sample(req.path_params.at("id")));
             }));

  server.Post("/api/session/:id/answer", guarded([&](const httplib::Request& req, httplib::Response& res) {
                send_json(res, service.submit_answer(req.path_params.at("id"), detail::parse_body(req)));
              }));

  server.Get("/api/session/:id/report", guarded([&](const httplib::Request& req, httplib::Response& res) {
               send_json(res, service.report(req.path_params.at("id")));
             }));

  server.Get("/api/session/:id/answers", guarded([&](const httplib::Request& req, httplib::Response& res) {
               res.set_content(service.export_answers(req.path_params.at("id")), "application/x-ndjson");
             }));

  const bool has_static = !static_dir.empty() && std::filesystem::is_directory(static_dir) &&
                          server.set_mount_point("/", static_dir.string());
  if (!has_static || !std::filesystem::exists(static_dir / "index.html")) {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPlaceholderPage, "text/html");
    });
  }
}

}  // namespace tvr
