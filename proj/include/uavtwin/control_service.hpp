#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <future>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "uavtwin/engine.hpp"
#include "uavtwin/scenario.hpp"

namespace uavtwin {

enum class Pacing { Real, Max };

inline constexpr unsigned short kDefaultPort = 8464;
inline constexpr std::size_t kSubscriberQueueLimit = 1024;

/// One telemetry subscriber: an independent bounded queue of CSV rows.
class Subscriber {
public:
  /// False (and the subscriber closes) when the queue is already full.
  bool push(std::string row) {
    {
      std::lock_guard lk(mu_);
      if (closed_) return false;
      if (queue_.size() >= kSubscriberQueueLimit) {
        closed_ = true;
        overflowed_ = true;
        cv_.notify_all();
        return false;
      }
      queue_.push_back(std::move(row));
    }
    cv_.notify_one();
    return true;
  }

  /// Blocks for the next row; nullopt once closed. Rows queued before an
  /// overflow are dropped, the subscriber is simply cut off.
  std::optional<std::string> pop() {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return closed_ || !queue_.empty(); });
    if (closed_) return std::nullopt;
    auto row = std::move(queue_.front());
    queue_.pop_front();
    return row;
  }

  void close() {
    std::lock_guard lk(mu_);
    closed_ = true;
    cv_.notify_all();
  }

  bool closed() const {
    std::lock_guard lk(mu_);
    return closed_;
  }
  bool overflowed() const {
    std::lock_guard lk(mu_);
    return overflowed_;
  }
  std::size_t queued() const {
    std::lock_guard lk(mu_);
    return queue_.size();
  }

private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  bool closed_ = false;
  bool overflowed_ = false;
};

/// Fan-out of telemetry rows. No replay: a new subscriber sees rows published after it joined.
class TelemetryHub {
public:
  std::shared_ptr<Subscriber> subscribe() {
    auto s = std::make_shared<Subscriber>();
    std::lock_guard lk(mu_);
    if (closed_) {
      s->close();
    } else {
      subs_.push_back(s);
    }
    return s;
  }

  void publish(const std::string& row) {
    std::lock_guard lk(mu_);
    for (auto it = subs_.begin(); it != subs_.end();) {
      if (!(*it)->push(row)) {
        it = subs_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void close_all() {
    std::lock_guard lk(mu_);
    closed_ = true;
    for (auto& s : subs_) s->close();
    subs_.clear();
  }

  std::size_t size() const {
    std::lock_guard lk(mu_);
    return subs_.size();
  }

private:
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Subscriber>> subs_;
  bool closed_ = false;
};

struct ServiceOptions {
  std::string bind_address = "127.0.0.1";
  unsigned short port = kDefaultPort;  // 0 picks an ephemeral port
  Pacing pacing = Pacing::Real;
};

/// HTTP control plane plus WebSocket telemetry over a single simulation. Request
/// handlers only enqueue commands or read published snapshots; one tick thread
/// owns the simulation.
class ControlService {
public:
  ControlService(Scenario scenario, ServiceOptions opts) : opts_(std::move(opts)) {
    if (auto v = validate(scenario); !v.empty()) throw ScenarioError("invalid scenario: " + v.front());
    sim_.emplace(std::move(scenario));
    publish_snapshot();
  }

  ControlService(const ControlService&) = delete;
  ControlService& operator=(const ControlService&) = delete;
  ~ControlService() { stop(); }

  /// Binds and starts serving. Throws on bind failure.
  void start() {
    namespace net = boost::asio;
    using tcp = net::ip::tcp;
    const tcp::endpoint ep(net::ip::make_address(opts_.bind_address), opts_.port);
    acceptor_.open(ep.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen();
    port_ = acceptor_.local_endpoint().port();
    tick_thread_ = std::thread([this] { tick_loop(); });
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  unsigned short port() const { return port_; }

  void stop() {
    if (stopping_.exchange(true)) return;
    {
      std::lock_guard lk(mu_);
      cv_.notify_all();
    }
    if (accept_thread_.joinable()) {
      // unblock accept() with a throwaway connection
      boost::system::error_code ec;
      boost::asio::ip::tcp::socket poke(io_);
      poke.connect({boost::asio::ip::make_address(opts_.bind_address == "0.0.0.0" ? "127.0.0.1" : opts_.bind_address), port_},
                   ec);
      accept_thread_.join();
    }
    if (tick_thread_.joinable()) tick_thread_.join();
    hub_.close_all();
    std::list<Connection> conns;
    {
      std::lock_guard lk(conn_mu_);
      for (auto& c : conns_) {
        boost::system::error_code ec;
        c.socket->shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
      }
      conns.swap(conns_);
    }
    for (auto& c : conns) c.thread.join();
    boost::system::error_code ec;
    acceptor_.close(ec);
  }

  TelemetryHub& hub() { return hub_; }

  /// Current state document, as served by GET /state.
  nlohmann::json state() const {
    std::lock_guard lk(snap_mu_);
    return snapshot_->state;
  }

private:
  struct Snapshot {
    nlohmann::json state;
    nlohmann::json scenario;
    std::set<NodeId> uavs;
    std::string status;
  };

  struct Reply {
    unsigned status = 200;
    nlohmann::json body;
  };

  struct Start {};
  struct Pause {};
  struct Reset {};
  struct Load {
    Scenario scenario;
  };
  using Control = std::variant<Start, Pause, Reset, Load>;

  struct Pending {
    Control command;
    std::promise<Reply> done;
  };

  struct Connection {
    std::shared_ptr<boost::asio::ip::tcp::socket> socket;
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> finished;
  };

  enum class Status { Loaded, Running, Paused, Finished };

  static const char* status_name(Status s) {
    switch (s) {
    case Status::Loaded: return "loaded";
    case Status::Running: return "running";
    case Status::Paused: return "paused";
    case Status::Finished: return "finished";
    }
    return "?";
  }

  // ---- tick thread

  void publish_snapshot() {
    auto snap = std::make_shared<Snapshot>();
    const auto& w = sim_->world();
    snap->status = status_name(status_);
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : w.nodes) {
      nlohmann::json j{{"id", n.id},
                       {"role", to_string(n.role)},
                       {"mount", to_string(n.mount)},
                       {"pose", {{"x", n.pose.x}, {"y", n.pose.y}, {"z", n.pose.z}}}};
      if (const auto h = w.handover.find(n.id); h != w.handover.end()) j["serving_cell"] = h->second.serving;
      if (const auto u = w.uavs.find(n.id); u != w.uavs.end()) j["battery_pct"] = u->second.battery_fraction();
      nodes.push_back(std::move(j));
    }
    snap->state = {{"status", snap->status}, {"t_s", w.t_s}, {"tick", w.tick_index}, {"nodes", std::move(nodes)}};
    snap->scenario = scenario_to_json(sim_->scenario());
    for (const auto& [id, u] : w.uavs) snap->uavs.insert(id);
    std::lock_guard lk(snap_mu_);
    snapshot_ = std::move(snap);
  }

  std::shared_ptr<const Snapshot> snapshot() const {
    std::lock_guard lk(snap_mu_);
    return snapshot_;
  }

  Reply apply(Control& c) {
    using clock = std::chrono::steady_clock;
    return std::visit(
        [&](auto& cmd) -> Reply {
          using T = std::decay_t<decltype(cmd)>;
          if constexpr (std::is_same_v<T, Start>) {
            if (status_ == Status::Finished) return {409, {{"error", "run finished; reset first"}}};
            if (status_ != Status::Running) next_tick_ = clock::now();
            status_ = Status::Running;
          } else if constexpr (std::is_same_v<T, Pause>) {
            if (status_ == Status::Running) {
              status_ = Status::Paused;
            } else if (status_ != Status::Paused) {
              return {409, {{"error", std::string("cannot pause while ") + status_name(status_)}}};
            }
          } else if constexpr (std::is_same_v<T, Reset>) {
            sim_->reset();
            std::lock_guard lk(mu_);
            velocities_.clear();
            status_ = Status::Loaded;
          } else {
            sim_.emplace(std::move(cmd.scenario));
            std::lock_guard lk(mu_);
            velocities_.clear();
            status_ = Status::Loaded;
          }
          publish_snapshot();
          return {200, snapshot()->state};
        },
        c);
  }

  bool run_complete() const {
    const auto& sc = sim_->scenario();
    return sim_->ended() || (sc.duration_s && sim_->world().t_s >= *sc.duration_s - 1e-9);
  }

  void tick_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = [&] {
      return std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(sim_->scenario().tick_s));
    };
    while (true) {
      std::deque<Pending> control;
      {
        std::unique_lock lk(mu_);
        auto woken = [&] { return stopping_.load() || !control_.empty(); };
        if (status_ != Status::Running) {
          cv_.wait(lk, woken);
        } else if (opts_.pacing == Pacing::Real) {
          cv_.wait_until(lk, next_tick_, woken);
        }
        if (stopping_) break;
        control.swap(control_);
      }
      for (auto& p : control) p.done.set_value(apply(p.command));
      if (status_ != Status::Running) continue;
      if (opts_.pacing == Pacing::Real && clock::now() < next_tick_) continue;

      std::vector<VelocityCommand> due;
      {
        std::lock_guard lk(mu_);
        due.assign(velocities_.begin(), velocities_.end());
        velocities_.clear();
      }
      for (const auto& s : sim_->step(due)) hub_.publish(telemetry_row(s));
      next_tick_ += period();
      if (run_complete()) status_ = Status::Finished;
      publish_snapshot();
    }
    std::lock_guard lk(mu_);
    for (auto& p : control_) p.done.set_value({503, {{"error", "service stopping"}}});
    control_.clear();
  }

  // ---- request side

  Reply submit(Control c) {
    std::future<Reply> f;
    {
      std::lock_guard lk(mu_);
      if (stopping_) return {503, {{"error", "service stopping"}}};
      control_.push_back({std::move(c), {}});
      f = control_.back().done.get_future();
    }
    cv_.notify_all();
    return f.get();
  }

  Reply set_velocity(const NodeId& id, const std::string& body) {
    const auto snap = snapshot();
    if (!snap->uavs.contains(id)) return {404, {{"error", "no UAV '" + id + "'"}}};
    if (snap->status != "running") return {409, {{"error", "command rejected while " + snap->status}}};
    Velocity v;
    try {
      const auto j = nlohmann::json::parse(body);
      v = {j.value("vx", 0.0), j.value("vy", 0.0), j.value("vz", 0.0)};
    } catch (const nlohmann::json::exception& e) {
      return {400, {{"error", e.what()}}};
    }
    {
      std::lock_guard lk(mu_);
      velocities_.push_back({id, v});
    }
    return {202, {{"queued", true}, {"node_id", id}, {"vx", v.vx}, {"vy", v.vy}, {"vz", v.vz}}};
  }

  Reply load(const std::string& body) {
    Scenario sc;
    try {
      sc = parse_scenario(body);
    } catch (const ScenarioError& e) {
      return {400, {{"violations", {e.what()}}}};
    }
    if (auto v = validate(sc); !v.empty()) return {400, {{"violations", v}}};
    return submit(Load{std::move(sc)});
  }

  Reply route(boost::beast::http::verb method, std::string_view target, const std::string& body) {
    using boost::beast::http::verb;
    if (const auto q = target.find('?'); q != std::string_view::npos) target = target.substr(0, q);
    const bool get = method == verb::get, post = method == verb::post;
    if (target == "/state") return get ? Reply{200, snapshot()->state} : method_not_allowed();
    if (target == "/scenario") {
      if (get) return {200, snapshot()->scenario};
      return post ? load(body) : method_not_allowed();
    }
    if (target == "/sim/start") return post ? submit(Start{}) : method_not_allowed();
    if (target == "/sim/pause") return post ? submit(Pause{}) : method_not_allowed();
    if (target == "/sim/reset") return post ? submit(Reset{}) : method_not_allowed();
    constexpr std::string_view uav = "/uav/", vel = "/velocity";
    if (target.starts_with(uav) && target.ends_with(vel) && target.size() > uav.size() + vel.size()) {
      const std::string id(target.substr(uav.size(), target.size() - uav.size() - vel.size()));
      return post ? set_velocity(id, body) : method_not_allowed();
    }
    return {404, {{"error", "no route " + std::string(target)}}};
  }

  static Reply method_not_allowed() { return {405, {{"error", "method not allowed"}}}; }

  // ---- connections

  void accept_loop() {
    while (!stopping_) {
      auto sock = std::make_shared<boost::asio::ip::tcp::socket>(io_);
      boost::system::error_code ec;
      acceptor_.accept(*sock, ec);
      if (stopping_) break;
      if (ec) continue;
      auto finished = std::make_shared<std::atomic<bool>>(false);
      std::lock_guard lk(conn_mu_);
      reap_locked();
      conns_.push_back({sock, std::thread([this, sock, finished] {
                          session(*sock);
                          *finished = true;
                        }),
                        finished});
    }
  }

  void reap_locked() {
    for (auto it = conns_.begin(); it != conns_.end();) {
      if (*it->finished) {
        it->thread.join();
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void session(boost::asio::ip::tcp::socket& sock) {
    namespace beast = boost::beast;
    namespace http = beast::http;
    beast::flat_buffer buf;
    try {
      while (!stopping_) {
        http::request<http::string_body> req;
        http::read(sock, buf, req);
        if (beast::websocket::is_upgrade(req)) {
          if (req.target() == "/telemetry") stream_telemetry(sock, req);
          return;
        }
        const auto r = route(req.method(), std::string_view(req.target().data(), req.target().size()), req.body());
        http::response<http::string_body> res(static_cast<http::status>(r.status), req.version());
        res.set(http::field::content_type, "application/json");
        res.set(http::field::access_control_allow_origin, "*");
        res.keep_alive(req.keep_alive());
        res.body() = r.body.dump();
        res.prepare_payload();
        http::write(sock, res);
        if (!res.keep_alive()) break;
      }
    } catch (const std::exception&) {
      // peer went away or sent garbage; drop the connection
    }
    boost::system::error_code ec;
    sock.shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
  }

  void stream_telemetry(boost::asio::ip::tcp::socket& sock,
                        const boost::beast::http::request<boost::beast::http::string_body>& req) {
    namespace websocket = boost::beast::websocket;
    websocket::stream<boost::asio::ip::tcp::socket&> ws(sock);
    ws.accept(req);
    ws.text(true);
    auto sub = hub_.subscribe();
    while (auto row = sub->pop()) ws.write(boost::asio::buffer(*row));
    boost::system::error_code ec;
    ws.close(sub->overflowed() ? websocket::close_code::policy_error : websocket::close_code::going_away, ec);
  }

  ServiceOptions opts_;
  std::optional<Simulation> sim_;  // tick thread only once started
  Status status_ = Status::Loaded;  // tick thread only once started
  std::chrono::steady_clock::time_point next_tick_{};

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Pending> control_;
  std::vector<VelocityCommand> velocities_;
  std::atomic<bool> stopping_{false};

  mutable std::mutex snap_mu_;
  std::shared_ptr<const Snapshot> snapshot_;

  TelemetryHub hub_;

  boost::asio::io_context io_;
  boost::asio::ip::tcp::acceptor acceptor_{io_};
  unsigned short port_ = 0;
  std::thread tick_thread_;
  std::thread accept_thread_;
  std::mutex conn_mu_;
  std::list<Connection> conns_;
};

} // namespace uavtwin
