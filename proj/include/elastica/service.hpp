#pragma once

#include <cstddef>
#include <memory>
#include <string>

namespace elastica {

struct ServiceOptions {
  std::size_t workers = 2;        ///< bounded pool for feature and run jobs
  std::size_t max_sessions = 64;  ///< session creation is refused beyond this
  std::size_t http_threads = 4;
};

/// Local HTTP/JSON service for the interactive workflow.
///
///   POST   /sessions                       image upload (raw body or multipart "image" + "config")
///   GET    /sessions/{id}                  status and metadata
///   DELETE /sessions/{id}
///   PUT    /sessions/{id}/seeds            {points: [{x, y, theta?}], params?}
///   POST   /sessions/{id}/run              {mode, params?} -> {job}
///   GET    /sessions/{id}/results/{job}    result JSON; 202 while computing
///   GET    /sessions/{id}/overlay/{job}    PNG; 202 while computing
///
/// Results are produced by the same pipeline as the command-line tool and
/// serialized identically.
class SessionService {
 public:
  explicit SessionService(ServiceOptions options = {});
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  /// Binds and serves until stop(); returns false when binding fails.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and serves on a background thread; returns the port or -1.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace elastica
