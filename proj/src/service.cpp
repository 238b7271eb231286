#include "elastica/service.hpp"

#include "elastica/error.hpp"
#include "elastica/io.hpp"
#include "elastica/pipeline.hpp"

#include "httplib.h"

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <thread>

namespace elastica {

namespace {

/// Fixed-size FIFO worker pool. Tasks submitted earlier start no later than
/// tasks submitted after them.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t n) {
    for (std::size_t i = 0; i < std::max<std::size_t>(n, 1); ++i) threads_.emplace_back([this] { loop(); });
  }
  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
      queue_.clear();
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }
  void submit(std::function<void()> task) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(task));
    }
    cv_.notify_one();
  }

 private:
  void loop() {
    while (true) {
      std::function<void()> task;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (stopping_) return;
        task = std::move(queue_.front());
        queue_.pop_front();
      }
      task();
    }
  }

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  std::vector<std::thread> threads_;
  bool stopping_ = false;
};

enum class JobState { Running, Done, Failed };

struct Job {
  JobState state = JobState::Running;
  std::string mode;
  std::string result;   // serialized result or error JSON
  std::string overlay;  // PNG bytes
  int error_status = 500;
};

struct Session {
  std::string id;
  Image image;
  RunConfig config;
  std::shared_future<std::shared_ptr<const FeatureSet>> features;
  std::string feature_error;
  bool features_ready = false;
  SeedFile seeds;
  std::map<std::string, std::shared_ptr<Job>> jobs;
  std::string active_job;  // empty when idle
  std::size_t next_job = 1;
};

const char* kJsonType = "application/json";

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(dump_json(body) + "\n", kJsonType);
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message,
                const Json& fields = nullptr) {
  Json err = {{"kind", kind}, {"message", message}};
  if (!fields.is_null()) err["fields"] = fields;
  send_json(res, status, {{"error", err}});
}

int status_for(const std::exception& e) {
  const auto* ee = dynamic_cast<const Error*>(&e);
  if (!ee) return 500;
  switch (ee->kind()) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::OutOfDomain:
    case ErrorKind::DimensionMismatch:
      return 422;
    case ErrorKind::Io:
      return 400;
    default:
      return 500;
  }
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidArgument, std::string("request body is not valid JSON: ") + e.what());
  }
}

}  // namespace

struct SessionService::Impl {
  explicit Impl(ServiceOptions o) : options(o), pool(o.workers) {
    server.new_task_queue = [n = o.http_threads] { return new httplib::ThreadPool(n); };
    routes();
  }

  ServiceOptions options;
  httplib::Server server;
  std::mutex mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::size_t next_session = 1;
  std::thread background;
  WorkerPool pool;  // declared last: destroyed first, so no task outlives the sessions

  std::shared_ptr<Session> find(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.path_params.at("id");
    std::lock_guard lock(mutex);
    const auto it = sessions.find(id);
    if (it == sessions.end()) {
      send_error(res, 404, "not_found", "unknown session " + id);
      return nullptr;
    }
    return it->second;
  }

  Json session_json(const Session& s) {
    Json jobs = Json::array();
    for (const auto& [id, job] : s.jobs) {
      jobs.push_back({{"id", id},
                      {"mode", job->mode},
                      {"status", job->state == JobState::Running ? "computing" : job->state == JobState::Done ? "done" : "error"}});
    }
    std::string status = "idle";
    if (!s.feature_error.empty()) {
      status = "error";
    } else if (!s.active_job.empty() || !s.features_ready) {
      status = "computing";
    }
    Json j = {{"id", s.id},
              {"status", status},
              {"features", s.feature_error.empty() ? (s.features_ready ? "ready" : "pending") : "error"},
              {"width", s.image.width},
              {"height", s.image.height},
              {"channels", s.image.channels},
              {"config", config_to_json(s.config)},
              {"seeds", seed_file_json(s.seeds)},
              {"jobs", jobs}};
    if (!s.feature_error.empty()) j["error"] = s.feature_error;
    return j;
  }

  void create(const httplib::Request& req, httplib::Response& res) {
    std::string image_bytes = req.body;
    Json config = Json::object();
    try {
      if (req.is_multipart_form_data()) {
        if (!req.has_file("image")) {
          send_error(res, 422, "invalid_argument", "multipart upload needs an 'image' part");
          return;
        }
        image_bytes = req.get_file_value("image").content;
        if (req.has_file("config")) config = Json::parse(req.get_file_value("config").content);
      } else if (req.has_param("config")) {
        config = Json::parse(req.get_param_value("config"));
      }
    } catch (const Json::exception& e) {
      send_error(res, 422, "invalid_argument", std::string("config is not valid JSON: ") + e.what());
      return;
    }
    auto s = std::make_shared<Session>();
    try {
      s->image = decode_image(image_bytes);
      s->image.validate();
      s->config = parse_config(config);
    } catch (const std::exception& e) {
      send_json(res, status_for(e), error_json(e));
      return;
    }
    {
      std::lock_guard lock(mutex);
      if (sessions.size() >= options.max_sessions) {
        send_error(res, 503, "busy", "session limit reached");
        return;
      }
      s->id = "s" + std::to_string(next_session++);
      sessions[s->id] = s;
    }
    // Features are computed once per session on the worker pool.
    auto promise = std::make_shared<std::promise<std::shared_ptr<const FeatureSet>>>();
    s->features = promise->get_future().share();
    std::weak_ptr<Session> weak = s;
    pool.submit([this, weak, promise] {
      auto s = weak.lock();
      if (!s) {
        promise->set_value(nullptr);
        return;
      }
      try {
        auto f = std::make_shared<const FeatureSet>(
            compute_features(s->image, s->config.feature, s->config.grid, s->config.metric.kind));
        std::lock_guard lock(mutex);
        s->features_ready = true;
        promise->set_value(std::move(f));
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        s->feature_error = e.what();
        promise->set_value(nullptr);
      }
    });
    std::lock_guard lock(mutex);
    send_json(res, 201, {{"id", s->id}, {"status", "computing"}, {"width", s->image.width}, {"height", s->image.height}});
  }

  void put_seeds(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req, res);
    if (!s) return;
    SeedFile seeds;
    try {
      seeds = parse_seed_file(parse_body(req));
      RunConfig probe = s->config;
      apply_params(probe, seeds.params);
    } catch (const std::exception& e) {
      send_json(res, status_for(e), error_json(e));
      return;
    }
    // Mode-independent checks here; mode-specific ones when a run is requested.
    Json fields = Json::array();
    for (const auto& p : seed_problems(seeds.points, "solve", s->image.width, s->image.height)) {
      if (p.rfind("points:", 0) != 0) fields.push_back(p);
    }
    if (!fields.empty()) {
      send_error(res, 422, "invalid_argument", "invalid seeds", fields);
      return;
    }
    std::lock_guard lock(mutex);
    s->seeds = std::move(seeds);
    send_json(res, 200, {{"accepted", s->seeds.points.size()}});
  }

  void run(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req, res);
    if (!s) return;
    RunConfig config;
    std::vector<SeedPoint> seeds;
    std::string job_id;
    auto job = std::make_shared<Job>();
    {
      std::lock_guard lock(mutex);
      if (!s->active_job.empty()) {
        send_error(res, 409, "busy", "run " + s->active_job + " is still computing");
        return;
      }
      if (!s->feature_error.empty()) {
        send_error(res, 409, "feature_error", "feature computation failed: " + s->feature_error);
        return;
      }
      try {
        const Json body = parse_body(req);
        if (!body.is_object()) fail(ErrorKind::InvalidArgument, "run request must be an object");
        for (const auto& [key, value] : body.items()) {
          if (key != "mode" && key != "params") fail(ErrorKind::InvalidArgument, "unknown key '" + key + "' in run request");
        }
        config = s->config;
        apply_params(config, s->seeds.params);
        if (body.contains("params")) apply_params(config, body.at("params"));
        if (body.contains("mode")) apply_params(config, {{"application", {{"mode", body.at("mode")}}}});
        if (!(config.feature == s->config.feature) || !(config.grid == s->config.grid) ||
            config.metric.kind != s->config.metric.kind) {
          fail(ErrorKind::InvalidArgument, "feature, grid and metric kind are fixed per session");
        }
      } catch (const std::exception& e) {
        send_json(res, status_for(e), error_json(e));
        return;
      }
      seeds = s->seeds.points;
      const auto problems = seed_problems(seeds, config.application.mode, s->image.width, s->image.height);
      if (!problems.empty()) {
        send_error(res, 422, "invalid_argument", "invalid seeds", problems);
        return;
      }
      job_id = "j" + std::to_string(s->next_job++);
      job->mode = config.application.mode;
      s->jobs[job_id] = job;
      s->active_job = job_id;
    }
    std::weak_ptr<Session> weak = s;
    auto features = s->features;
    pool.submit([this, weak, job, job_id, config, seeds, features] {
      std::string result, overlay, error;
      int error_status = 500;
      bool ok = false;
      try {
        const auto f = features.get();
        if (!f) fail(ErrorKind::InvalidArgument, "features are unavailable");
        const RunOutput out = run_application(*f, config, seeds);
        result = dump_json(out.result) + "\n";
        overlay = encode_png(render_overlay(f->image, out.overlay));
        ok = true;
      } catch (const std::exception& e) {
        error = dump_json(error_json(e)) + "\n";
        error_status = status_for(e);
      }
      std::lock_guard lock(mutex);
      job->result = ok ? std::move(result) : std::move(error);
      job->overlay = std::move(overlay);
      job->error_status = error_status;
      job->state = ok ? JobState::Done : JobState::Failed;
      if (auto s = weak.lock(); s && s->active_job == job_id) s->active_job.clear();
    });
    send_json(res, 202, {{"job", job_id}, {"status", "computing"}});
  }

  std::shared_ptr<Job> find_job(const std::shared_ptr<Session>& s, const httplib::Request& req,
                                httplib::Response& res) {
    const std::string id = req.path_params.at("job");
    const auto it = s->jobs.find(id);
    if (it == s->jobs.end()) {
      send_error(res, 404, "not_found", "unknown job " + id);
      return nullptr;
    }
    return it->second;
  }

  void results(const httplib::Request& req, httplib::Response& res, bool overlay) {
    auto s = find(req, res);
    if (!s) return;
    std::lock_guard lock(mutex);
    auto job = find_job(s, req, res);
    if (!job) return;
    if (job->state == JobState::Running) {
      send_json(res, 202, {{"job", req.path_params.at("job")}, {"status", "computing"}});
    } else if (job->state == JobState::Failed) {
      res.status = job->error_status;
      res.set_content(job->result, kJsonType);
    } else if (overlay) {
      res.status = 200;
      res.set_content(job->overlay, "image/png");
    } else {
      res.status = 200;
      res.set_content(job->result, kJsonType);
    }
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"ok", true}}); });
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) { create(req, res); });
    server.Get("/sessions/:id", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req, res);
      if (!s) return;
      std::lock_guard lock(mutex);
      send_json(res, 200, session_json(*s));
    });
    server.Delete("/sessions/:id", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req, res);
      if (!s) return;
      std::lock_guard lock(mutex);
      sessions.erase(s->id);
      send_json(res, 200, {{"deleted", s->id}});
    });
    server.Put("/sessions/:id/seeds", [this](const httplib::Request& req, httplib::Response& res) { put_seeds(req, res); });
    server.Post("/sessions/:id/run", [this](const httplib::Request& req, httplib::Response& res) { run(req, res); });
    server.Get("/sessions/:id/results/:job",
               [this](const httplib::Request& req, httplib::Response& res) { results(req, res, false); });
    server.Get("/sessions/:id/overlay/:job",
               [this](const httplib::Request& req, httplib::Response& res) { results(req, res, true); });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_json(res, 500, error_json(e));
      } catch (...) {
        send_error(res, 500, "internal", "unknown error");
      }
    });
  }
};

SessionService::SessionService(ServiceOptions options) : impl_(std::make_unique<Impl>(options)) {}

SessionService::~SessionService() { stop(); }

bool SessionService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int SessionService::start_background(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port < 0) return -1;
  impl_->background = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void SessionService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->background.joinable()) impl_->background.join();
}

}  // namespace elastica
