// Copyright 2026 The tracekit Authors
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

#include "tracekit/sim.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>

#include "tracekit/errors.h"
#include "tracekit/syslog.h"
#include "tracekit/trace_api.h"

namespace tracekit {

double SimRng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double SimRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::int64_t SimRng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(eng_() % span);
}

double SimRng::normal() {
  // Box-Muller; one draw per call keeps the stream simple.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double SimRng::exponential(double mean) {
  if (mean <= 0) return 0.0;
  return -mean * std::log(1.0 - uniform());
}

double SimRng::lognormal_median(double median, double sigma) {
  if (sigma <= 0) return median;
  return median * std::exp(sigma * normal());
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void validate_call(const CallSpec& c, int depth) {
  if (depth > 16) throw ValidationError("call tree deeper than 16");
  if (c.service.empty()) throw ValidationError("call spec without a service");
  if (c.service.find('@') != std::string::npos) throw ValidationError("service names may not contain '@'");
  if (c.compute.median_ms <= 0 || c.compute.sigma < 0) throw ValidationError("bad compute distribution for " + c.service);
  if (c.fanout != "serial" && c.fanout != "parallel" && c.fanout != "redundant") {
    throw ValidationError("unknown fanout '" + c.fanout + "'");
  }
  if (c.fanout == "redundant" && (c.k < 1 || c.k > static_cast<int>(c.calls.size()))) {
    throw ValidationError("redundant fanout of " + c.service + " needs 1 <= k <= calls");
  }
  if (c.request_bytes < 0 || c.response_bytes < 0) throw ValidationError("negative payload");
  for (const auto& ch : c.calls) validate_call(ch, depth + 1);
}

class CollectSink final : public EventSink {
 public:
  void emit(EmittedEvent e) override { events.push_back(std::move(e)); }
  std::vector<EmittedEvent> events;
};

CallSpec random_tree(SimRng& rng, const ServingScenario& sc, const std::string& service, int depth) {
  CallSpec c;
  c.service = service;
  c.compute = {rng.uniform(0.2, 3.0), 0.3};
  c.request_bytes = rng.uniform_int(100, 2000);
  c.response_bytes = rng.uniform_int(200, 20000);
  if (depth >= sc.random_depth) return c;
  const int n = static_cast<int>(rng.uniform_int(depth == 0 ? 1 : 0, sc.random_fanout));
  for (int i = 0; i < n; ++i) {
    std::string child;
    do {
      child = "svc" + std::to_string(rng.uniform_int(1, sc.random_services - 1));
    } while (child == service);
    c.calls.push_back(random_tree(rng, sc, child, depth + 1));
  }
  const double u = rng.uniform();
  if (n >= 2 && u < 1.0 / 3) {
    c.fanout = "parallel";
  } else if (n >= 2 && u < 2.0 / 3) {
    c.fanout = "redundant";
    c.k = static_cast<int>(rng.uniform_int(1, n - 1));
  }
  return c;
}

class SessionGen {
 public:
  SessionGen(const ServingScenario& sc, SessionBundle& out)
      : sc_(sc), out_(out), rng_(sc.seed), drng_(sc.seed ^ 0x9e3779b97f4a7c15ULL) {
    out_.topology = make_fat_tree(sc.topology);
    for (const auto& [h, _] : out_.topology.host_attachments) hosts_.push_back(h);
    if (hosts_.empty()) throw ValidationError("topology has no hosts");
    placement_ = sc.placement;
  }

  void run() {
    for (int i = 0; i < sc_.sessions; ++i) {
      const std::int64_t t0 = sc_.start_us + static_cast<std::int64_t>(std::llround(i * sc_.interarrival_ms * 1000.0)) +
                              static_cast<std::int64_t>(rng_.uniform_int(0, 999));
      sink_.events.clear();
      extra_records_.clear();
      SessionTruth truth;
      truth.start_us = t0;
      truth_ = &truth;
      if (sc_.cdn.enabled) {
        cdn_session(t0);
      } else {
        CallSpec tree = sc_.random_blueprints ? random_tree(rng_, sc_, "svc0", 0) : sc_.blueprint;
        serving_session(tree, t0);
      }
      deliver(truth);
      out_.truth.push_back(std::move(truth));
    }
    finish();
  }

 private:
  struct Reply {
    std::int64_t f = 0;
    std::int64_t l = 0;
    std::string header;
    std::map<std::string, std::int64_t> path;
  };

  struct Child {
    const CallSpec* spec = nullptr;
    std::string node;
    std::string header;
    RpcId rpc = 0;
    std::int64_t out_f = 0, out_l = 0, in_f = 0, in_l = 0;
    std::int64_t resp_f = 0, resp_l = 0;
    Reply reply;
  };

  std::string host_for(const std::string& service) {
    auto it = placement_.find(service);
    if (it != placement_.end()) return it->second;
    const std::string& h = hosts_[placement_.size() % hosts_.size()];
    placement_[service] = h;
    return h;
  }
  std::string node_of(const std::string& service) { return service + "@" + host_for(service); }

  std::int64_t off(const std::string& node) {
    auto it = out_.clock_offsets_us.find(node);
    if (it != out_.clock_offsets_us.end()) return it->second;
    SimRng local(fnv1a(node, sc_.seed));
    const auto o = static_cast<std::int64_t>(
        std::llround(local.uniform(-sc_.clock_offset_max_us, sc_.clock_offset_max_us)));
    out_.clock_offsets_us[node] = o;
    return o;
  }

  Tracer& tracer(const std::string& node) {
    auto it = tracers_.find(node);
    if (it == tracers_.end()) {
      it = tracers_.emplace(node, std::make_unique<Tracer>(node, sink_, clock_, fnv1a(node, sc_.seed) | 1)).first;
    }
    return *it->second;
  }

  EdgeOptions opts(const std::string& node, std::int64_t f, std::int64_t l, std::int64_t bytes,
                   const std::string& peer) {
    EdgeOptions o;
    o.first_byte_us = f + off(node);
    o.last_byte_us = l + off(node);
    o.payload_bytes = bytes;
    o.peer = peer;
    return o;
  }

  std::int64_t compute(const ComputeDist& d) {
    return std::max<std::int64_t>(1, std::llround(rng_.lognormal_median(d.median_ms * 1000.0, d.sigma)));
  }
  std::int64_t ser(std::int64_t bytes) const {
    return static_cast<std::int64_t>(std::llround(static_cast<double>(bytes) / sc_.bytes_per_us));
  }
  std::int64_t net() { return std::llround(sc_.prop_us + rng_.exponential(sc_.jitter_mean_us)); }

  Child issue(SessionContext& ctx, const std::string& node, const CallSpec& spec, std::int64_t t) {
    Child c;
    c.spec = &spec;
    c.node = node_of(spec.service);
    c.out_f = t;
    c.out_l = t + ser(spec.request_bytes);
    c.header = tracer(node).sendtonext(ctx, opts(node, c.out_f, c.out_l, spec.request_bytes, c.node));
    c.rpc = decode_header(c.header).rpc_id;
    std::int64_t queue = 0;
    for (const auto& q : sc_.queues) {
      if (q.from_service == service_of(node) && q.to_service == spec.service && rng_.bernoulli(q.fraction)) {
        queue += std::llround(rng_.uniform(q.min_ms, q.max_ms) * 1000.0);
      }
    }
    c.in_f = t + net() + queue;
    c.in_l = c.in_f + ser(spec.request_bytes);
    truth_->rpcs.push_back({c.rpc, ctx.header().rpc_id, node, c.node, queue, std::nullopt, 0});
    return c;
  }

  void deliver(Child& c, const std::string& caller) {
    SessionContext cctx = tracer(c.node).create(c.header, opts(c.node, c.in_f, c.in_l, c.spec->request_bytes, caller));
    c.reply = serve(*c.spec, cctx, c.node, c.in_l);
    tracer(c.node).close(cctx);
    c.resp_f = c.reply.f + net();
    c.resp_l = c.resp_f + ser(c.spec->response_bytes);
  }

  void receive(SessionContext& ctx, const std::string& node, const Child& c) {
    tracer(node).recvfromnext(ctx, c.reply.header, opts(node, c.resp_f, c.resp_l, c.spec->response_bytes, c.node));
  }

  static void merge(std::map<std::string, std::int64_t>& into, const std::map<std::string, std::int64_t>& from) {
    for (const auto& [k, v] : from) into[k] += v;
  }

  Reply serve(const CallSpec& spec, SessionContext& ctx, const std::string& node, std::int64_t t_in_l) {
    Reply r;
    const std::string& svc = spec.service;
    std::int64_t extra = 0;
    if (slow_active_ && sc_.slow && sc_.slow->service == svc) {
      extra = std::llround(sc_.slow->extra_ms * 1000.0);
      truth_->slow_injected = true;
    }
    std::int64_t reply_at = 0;
    if (spec.calls.empty()) {
      const std::int64_t g = compute(spec.compute) + extra;
      r.path[svc] += g;
      reply_at = t_in_l + g;
    } else if (spec.fanout == "serial") {
      std::int64_t pred = t_in_l;
      std::vector<RpcId> done;
      for (const auto& cs : spec.calls) {
        const std::int64_t g = compute(spec.compute);
        r.path[svc] += g;
        Child c = issue(ctx, node, cs, pred + g);
        for (RpcId prev : done) truth_->serialization.insert({prev, c.rpc});
        deliver(c, node);
        receive(ctx, node, c);
        truth_->contributors.insert(c.rpc);
        merge(r.path, c.reply.path);
        pred = c.resp_l;
        done.push_back(c.rpc);
      }
      const std::int64_t g = compute(spec.compute) + extra;
      r.path[svc] += g;
      reply_at = pred + g;
    } else {
      std::vector<Child> kids;
      std::int64_t t = t_in_l + compute(spec.compute);
      for (const auto& cs : spec.calls) {
        kids.push_back(issue(ctx, node, cs, t));
        t = kids.back().out_l + 1;
      }
      const std::int64_t last_out = kids.back().out_f;
      for (auto& c : kids) {
        deliver(c, node);
        if (c.resp_f <= last_out) {
          // Every request leaves before the first response arrives.
          c.resp_f = last_out + 1;
          c.resp_l = c.resp_f + ser(c.spec->response_bytes);
        }
      }
      std::vector<std::size_t> order(kids.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return kids[a].resp_l < kids[b].resp_l; });
      const std::size_t needed = spec.fanout == "redundant" ? static_cast<std::size_t>(spec.k) : kids.size();
      const Child& det = kids[order[needed - 1]];
      const std::int64_t g = compute(spec.compute) + extra;
      reply_at = det.resp_l + g;
      r.path[svc] += (det.out_f - t_in_l) + g;
      merge(r.path, det.reply.path);
      const std::int64_t reply_l = reply_at + ser(spec.response_bytes);
      for (std::size_t i = 0; i < order.size(); ++i) {
        Child& c = kids[order[i]];
        if (i < needed) {
          truth_->contributors.insert(c.rpc);
        } else {
          const std::int64_t f = std::max(c.resp_f, reply_l + 1 + rng_.uniform_int(0, 100));
          c.resp_f = f;
          c.resp_l = f + ser(c.spec->response_bytes);
          truth_->late.insert(c.rpc);
        }
      }
      for (const auto& c : kids) receive(ctx, node, c);
    }
    if (slow_active_ && sc_.slow && sc_.slow->service == svc) truth_->slow_on_path = true;
    r.f = reply_at;
    r.l = reply_at + ser(spec.response_bytes);
    r.header = tracer(node).sendtoprev(ctx, opts(node, r.f, r.l, spec.response_bytes, ""));
    return r;
  }

  void serving_session(const CallSpec& tree, std::int64_t t0) {
    slow_active_ = sc_.slow && rng_.bernoulli(sc_.slow->fraction);
    const std::string root = node_of(tree.service);
    const std::int64_t l0 = t0 + ser(tree.request_bytes);
    SessionContext ctx = tracer(root).create("", opts(root, t0, l0, tree.request_bytes, "user"));
    truth_->session_id = ctx.header().session_id;
    truth_->rpcs.push_back({ctx.header().rpc_id, kRootParent, "user", root, 0, std::nullopt, 0});
    tracer(root).annotate(ctx, "page", sc_.page, t0 + off(root));
    Reply r = serve(tree, ctx, root, l0);
    tracer(root).close(ctx);
    truth_->e2e_us = r.l - t0;
    truth_->path_compute_us = r.path;
    // The slow service only counts as on-path if its compute is on the path.
    if (truth_->slow_on_path && sc_.slow) truth_->slow_on_path = r.path.count(sc_.slow->service) != 0;
    if (sc_.navtiming) navtiming(t0, r.l);
  }

  void navtiming(std::int64_t t0, std::int64_t t_end) {
    NavTimingRecord nav;
    nav.session_id = truth_->session_id;
    const std::string clock = "browser";
    std::int64_t t = t0 - std::llround(rng_.uniform(1, 20) * 1000) - std::llround(rng_.uniform(5, 50) * 1000);
    const std::int64_t start = t;
    auto ev = [&](const std::string& name, std::int64_t dur) {
      nav.events.push_back({name, {t, clock}, {t + dur, clock}});
      t += dur;
    };
    ev("dns", std::llround(rng_.uniform(1, 20) * 1000));
    ev("connect", t0 - t);
    ev("request", t_end - t0);
    ev("response", std::llround(rng_.uniform(5, 50) * 1000));
    ev("dom_processing", std::llround(rng_.uniform(50, 400) * 1000));
    ev("render", std::llround(rng_.uniform(5, 100) * 1000));
    nav.onload_ms = static_cast<double>(t - start) / 1000.0;
    extra_records_.push_back({SessionRecord{nav}, t});
  }

  void cdn_session(std::int64_t t0) {
    const auto& cdn = sc_.cdn;
    const std::string user = "browser@u" + std::to_string(rng_.uniform_int(0, cdn.users - 1)) + ".user";
    const std::string edge = cdn.edge_service + "@edge0.cdn";
    const std::string origin = node_of(cdn.origin_service);
    constexpr double kInternetBytesPerUs = 12.5;  // 100 Mbit/s
    auto iser = [&](std::int64_t b) -> std::int64_t { return std::llround(static_cast<double>(b) / kInternetBytesPerUs); };

    const bool internet = rng_.bernoulli(cdn.internet_fraction);
    const std::int64_t rtt = std::llround((internet ? rng_.uniform(80, 300) : rng_.uniform(5, 40)) * 1000);
    std::int64_t retrans = 0;
    if (internet) {
      const double u = rng_.uniform();
      retrans = u < 0.5 ? 0 : (u < 0.85 ? 1 : 2);
    }
    const bool miss = internet ? rng_.bernoulli(0.2) : true;
    const std::int64_t backend = std::llround((internet ? rng_.uniform(5, 20) : rng_.uniform(80, 400)) * 1000);
    const std::int64_t stack = std::llround(rng_.uniform(0, cdn.stack_delay_max_ms) * 1000);
    const std::int64_t req_bytes = 600, resp_bytes = 20000;

    // rto is at least the real round trip plus the request transfer, so the
    // download-stack bound can never exceed the injected stack delay.
    const std::int64_t srtt = std::max<std::int64_t>(1, std::llround(rtt * (1.0 + 0.03 * rng_.normal())));
    const std::int64_t rttvar = std::llround(rtt * (internet ? rng_.uniform(0.3, 0.8) : rng_.uniform(0.05, 0.3)));
    const std::int64_t rto = std::max({std::int64_t{200000}, srtt + 4 * rttvar, rtt + iser(req_bytes) + 1000});

    slow_active_ = false;
    const std::int64_t l0 = t0 + 200;
    SessionContext uctx = tracer(user).create("", opts(user, t0, l0, 0, "user"));
    truth_->session_id = uctx.header().session_id;
    truth_->rpcs.push_back({uctx.header().rpc_id, kRootParent, "user", user, 0, std::nullopt, 0});
    tracer(user).annotate(uctx, "page", sc_.page, t0 + off(user));

    const std::int64_t out_f = l0 + std::llround(rng_.uniform(0.1, 1.0) * 1000);
    const std::int64_t out_l = out_f + iser(req_bytes);
    std::string h = tracer(user).sendtonext(uctx, opts(user, out_f, out_l, req_bytes, edge));
    const RpcId rpc = decode_header(h).rpc_id;
    const std::int64_t in_f = out_f + rtt / 2;
    const std::int64_t in_l = in_f + iser(req_bytes);
    SessionContext ectx = tracer(edge).create(h, opts(edge, in_f, in_l, req_bytes, user));
    tracer(edge).annotate(ectx, "conn_id", "conn-" + user, in_f + off(edge));

    std::int64_t t = in_l + std::llround(rng_.uniform(0.5, 4.0) * 1000);
    std::int64_t be = 0;
    if (miss) {
      CallSpec os;
      os.service = cdn.origin_service;
      os.compute = {backend / 1000.0, 0.0};
      os.request_bytes = 500;
      os.response_bytes = resp_bytes;
      Child c = issue(ectx, edge, os, t);
      // Edge -> origin crosses the WAN; keep it inside the backend time.
      deliver(c, edge);
      receive(ectx, edge, c);
      truth_->contributors.insert(c.rpc);
      be = c.resp_l - c.out_f;
      t = c.resp_l;
      (void)origin;
    }
    t += std::llround(rng_.uniform(0.5, 4.0) * 1000);
    const std::int64_t cdn_us = (t - in_l) - be;
    const std::int64_t ro_f = t, ro_l = t + iser(resp_bytes);
    std::string rh = tracer(edge).sendtoprev(ectx, opts(edge, ro_f, ro_l, resp_bytes, ""));
    tracer(edge).close(ectx);

    TcpSnapshot snap;
    snap.session_id = truth_->session_id;
    snap.connection_id = "conn-" + user;
    snap.at = {ro_f + off(edge), edge};
    snap.srtt_us = srtt;
    snap.rttvar_us = rttvar;
    snap.rto_us = rto;
    snap.retrans_segments = retrans;
    snap.cwnd_segments = 10;
    snap.send_window_bytes = 65535;
    snap.recv_window_bytes = 65535;
    extra_records_.push_back({SessionRecord{snap}, ro_f});

    const std::int64_t arrive = ro_f + rtt / 2 + retrans * rto;
    const std::int64_t ri_f = arrive + stack;
    const std::int64_t ri_l = ri_f + iser(resp_bytes);
    tracer(user).recvfromnext(uctx, rh, opts(user, ri_f, ri_l, resp_bytes, edge));
    const std::int64_t done = ri_l + std::llround(rng_.uniform(1, 5) * 1000);
    tracer(user).sendtoprev(uctx, opts(user, done, done + 100, 0, ""));
    tracer(user).close(uctx);

    const std::int64_t path = rtt + retrans * rto;
    const std::int64_t server = cdn_us + be;
    truth_->rpcs.push_back({rpc, uctx.header().rpc_id, user, edge, 0,
                            path > server ? Bottleneck::kInternet : Bottleneck::kCdnBackend, stack});
    truth_->contributors.insert(rpc);
    truth_->e2e_us = done + 100 - t0;
  }

  std::int64_t true_time(const SessionRecord& r) {
    return std::visit(
        [&](const auto& v) -> std::int64_t {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, RpcEdgeRecord>) {
            return v.last_byte.micros - off(v.node);
          } else if constexpr (std::is_same_v<T, AnnotationRecord>) {
            return v.at.micros - off(v.node);
          } else if constexpr (std::is_same_v<T, TcpSnapshot>) {
            return v.at.micros - off(v.at.clock_id);
          } else {
            return v.events.empty() ? 0 : v.events.back().end.micros;
          }
        },
        r);
  }

  static std::string service_of_record(const SessionRecord& r) {
    if (const auto* e = std::get_if<RpcEdgeRecord>(&r)) return service_of(e->node);
    if (const auto* a = std::get_if<AnnotationRecord>(&r)) return service_of(a->node);
    if (const auto* s = std::get_if<TcpSnapshot>(&r)) return service_of(s->at.clock_id);
    return "";
  }

  void deliver(SessionTruth& truth) {
    std::vector<SessionRecord> recs;
    for (auto& e : sink_.events) {
      std::visit([&](auto& v) { recs.emplace_back(v); }, e.record);
    }
    for (auto& x : extra_records_) recs.push_back(x.first);
    for (auto& r : recs) {
      ++truth.events;
      const std::int64_t at_us = true_time(r);
      std::int64_t arrival_ms = (at_us + std::llround(drng_.exponential(sc_.arrival_delay_mean_ms * 1000.0))) / 1000;
      if (sc_.volume_drop && service_of_record(r) == sc_.volume_drop->service &&
          arrival_ms >= sc_.volume_drop->start_ms && arrival_ms < sc_.volume_drop->end_ms &&
          !drng_.bernoulli(sc_.volume_drop->keep)) {
        ++truth.lost;
        truth.edge_lost = truth.edge_lost || std::holds_alternative<RpcEdgeRecord>(r);
        continue;
      }
      if (drng_.bernoulli(sc_.loss_rate)) {
        ++truth.lost;
        truth.edge_lost = truth.edge_lost || std::holds_alternative<RpcEdgeRecord>(r);
        continue;
      }
      pending_.push_back({r, arrival_ms});
      if (drng_.bernoulli(sc_.duplication_rate)) {
        ++truth.duplicated;
        pending_.push_back({r, arrival_ms + std::llround(drng_.exponential(sc_.arrival_delay_mean_ms))});
      }
    }
  }

  void finish() {
    if (sc_.shuffle) {
      drng_.shuffle(pending_);
    } else {
      std::stable_sort(pending_.begin(), pending_.end(),
                       [](const SimRecord& a, const SimRecord& b) { return a.arrival_ms < b.arrival_ms; });
    }
    out_.records = std::move(pending_);
  }

  const ServingScenario& sc_;
  SessionBundle& out_;
  SimRng rng_;
  SimRng drng_;  // delivery effects only, so loss settings never change the sessions
  std::vector<std::string> hosts_;
  std::map<std::string, std::string> placement_;
  ManualClock clock_;
  CollectSink sink_;
  std::map<std::string, std::unique_ptr<Tracer>> tracers_;
  SessionTruth* truth_ = nullptr;
  bool slow_active_ = false;
  std::vector<std::pair<SessionRecord, std::int64_t>> extra_records_;
  std::vector<SimRecord> pending_;
};

}  // namespace

void ServingScenario::validate() const {
  if (sessions < 0) throw ValidationError("sessions must be >= 0");
  if (interarrival_ms < 0) throw ValidationError("interarrival must be >= 0");
  if (bytes_per_us <= 0) throw ValidationError("bytes_per_us must be positive");
  if (prop_us < 0 || jitter_mean_us < 0 || clock_offset_max_us < 0 || arrival_delay_mean_ms < 0) {
    throw ValidationError("network and clock parameters must be >= 0");
  }
  for (double p : {loss_rate, duplication_rate}) {
    if (p < 0 || p > 1) throw ValidationError("rates must be in [0, 1]");
  }
  if (random_blueprints) {
    if (random_services < 2 || random_depth < 0 || random_fanout < 1) throw ValidationError("bad random blueprint parameters");
  } else if (!cdn.enabled) {
    validate_call(blueprint, 0);
  }
  if (slow && (slow->extra_ms < 0 || slow->fraction < 0 || slow->fraction > 1)) throw ValidationError("bad slow service");
  for (const auto& q : queues) {
    if (q.min_ms < 0 || q.max_ms < q.min_ms || q.fraction < 0 || q.fraction > 1) throw ValidationError("bad link queue");
  }
  if (volume_drop && (volume_drop->keep < 0 || volume_drop->keep > 1)) throw ValidationError("bad volume drop");
  if (cdn.enabled && (cdn.users < 1 || cdn.internet_fraction < 0 || cdn.internet_fraction > 1 || cdn.stack_delay_max_ms < 0)) {
    throw ValidationError("bad cdn parameters");
  }
}

SessionBundle generate_sessions(const ServingScenario& sc) {
  sc.validate();
  SessionBundle out;
  SessionGen(sc, out).run();
  return out;
}

std::string sim_record_line(const SimRecord& r) {
  Json j = Json::parse(encode_session_record(r.record));
  j["arrival_ms"] = r.arrival_ms;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Syslog

std::vector<Template> standard_templates() {
  return {
      {"MODULE_FAIL", "%MODULE-2-FAIL: Module (\\d+) failed", Layer::kHardware, "module", {"module"},
       {"%MODULE-2-FAIL: Module 3 failed"}},
      {"LINK_DOWN", "%LINK-3-DOWN: Interface (\\S+) is down", Layer::kPhy, "link", {"if"},
       {"%LINK-3-DOWN: Interface eth1/3 is down"}},
      {"LINK_UP", "%LINK-3-UP: Interface (\\S+) is up", Layer::kPhy, "link", {"if"},
       {"%LINK-3-UP: Interface eth1/3 is up"}},
      {"STP_CHANGE", "%STP-5-TOPOLOGY_CHANGE: Topology change on vlan (\\d+)", Layer::kL2, "stp", {"vlan"},
       {"%STP-5-TOPOLOGY_CHANGE: Topology change on vlan 10"}},
      {"IF_CHANGE", "%LINEPROTO-5-UPDOWN: Line protocol on Interface (\\S+), changed state to (up|down)",
       Layer::kL2, "link", {"if", "state"},
       {"%LINEPROTO-5-UPDOWN: Line protocol on Interface eth2/1, changed state to down"}},
      {"BGP_DOWN", "%BGP-5-ADJCHANGE: neighbor (\\S+) Down", Layer::kRouting, "bgp", {"peer"},
       {"%BGP-5-ADJCHANGE: neighbor 10.0.0.1 Down"}},
      {"FAN_FAIL", "%ENV-2-FAN: Fan (\\d+) failure", Layer::kHardware, "env", {"fan"},
       {"%ENV-2-FAN: Fan 2 failure"}},
      {"CRC_ERRORS", "%IF-4-CRC: Interface (\\S+) CRC errors (\\d+)", Layer::kPhy, "link", {"if", "count"},
       {"%IF-4-CRC: Interface eth1/1 CRC errors 12"}},
  };
}

namespace {

std::vector<CausalRule> cascade_rules() {
  return {
      {"MODULE_FAIL", "LINK_DOWN", RuleScope::kIntraDevice, 1.0, 0},
      {"LINK_DOWN", "STP_CHANGE", RuleScope::kIntraDevice, 1.0, 0},
      {"LINK_DOWN", "IF_CHANGE", RuleScope::kInterDevice, 1.0, 0},
      {"LINK_DOWN", "LINK_UP", RuleScope::kIntraDevice, 1.0, 0},
      {"LINK_UP", "LINK_DOWN", RuleScope::kIntraDevice, 1.0, 0},
  };
}

std::string raw_for(const std::string& id, SimRng& rng) {
  const std::string port = "eth" + std::to_string(rng.uniform_int(1, 4)) + "/" + std::to_string(rng.uniform_int(1, 48));
  if (id == "MODULE_FAIL") return "%MODULE-2-FAIL: Module " + std::to_string(rng.uniform_int(1, 8)) + " failed";
  if (id == "LINK_DOWN") return "%LINK-3-DOWN: Interface " + port + " is down";
  if (id == "LINK_UP") return "%LINK-3-UP: Interface " + port + " is up";
  if (id == "STP_CHANGE") return "%STP-5-TOPOLOGY_CHANGE: Topology change on vlan " + std::to_string(rng.uniform_int(1, 4094));
  if (id == "IF_CHANGE") return "%LINEPROTO-5-UPDOWN: Line protocol on Interface " + port + ", changed state to down";
  if (id == "BGP_DOWN") return "%BGP-5-ADJCHANGE: neighbor 10.0.0." + std::to_string(rng.uniform_int(1, 254)) + " Down";
  if (id == "FAN_FAIL") return "%ENV-2-FAN: Fan " + std::to_string(rng.uniform_int(1, 6)) + " failure";
  return "%IF-4-CRC: Interface " + port + " CRC errors " + std::to_string(rng.uniform_int(1, 999));
}

int severity_for(const std::string& id) {
  if (id == "MODULE_FAIL" || id == "FAN_FAIL") return 2;
  if (id == "LINK_DOWN" || id == "LINK_UP") return 3;
  if (id == "CRC_ERRORS") return 4;
  return 5;
}

SyslogMessage message(const std::string& device, std::int64_t at, const std::string& id, std::string raw, int sev) {
  SyslogMessage m;
  m.device = device;
  m.at = {at, std::string(kWallClock)};
  m.severity = sev;
  m.raw = std::move(raw);
  m.template_id = id;
  return m;
}

void sort_messages(std::vector<SyslogMessage>& v) {
  std::stable_sort(v.begin(), v.end(), [](const SyslogMessage& a, const SyslogMessage& b) {
    return std::tie(a.at.micros, a.device, *a.template_id) < std::tie(b.at.micros, b.device, *b.template_id);
  });
}

const char* kPhrases[] = {"link state changed", "buffer threshold crossed", "session reset",
                          "counter wrapped", "queue drop", "power supply notice",
                          "config committed", "optics warning", "neighbor timeout",
                          "arp refresh", "lacp churn", "fib update"};

std::vector<std::string> devices_of(const TopologySnapshot& t) {
  std::vector<std::string> out;
  for (const auto& d : t.devices) out.push_back(d.device_id);
  return out;
}

}  // namespace

void RuleCorpusScenario::validate() const {
  if (templates < 2 || templates > 999) throw ValidationError("templates must be in [2, 999]");
  if (rules < 0 || 2 * rules > templates) throw ValidationError("need two distinct templates per planted rule");
  if (messages < 0 || horizon_s <= 0) throw ValidationError("messages and horizon must be positive");
  if (follow_prob < 0 || follow_prob > 1 || inter_fraction < 0 || inter_fraction > 1) {
    throw ValidationError("probabilities must be in [0, 1]");
  }
  if (max_lag_us < 0 || causes_min < 0 || causes_max < causes_min) throw ValidationError("bad cause parameters");
}

SyslogBundle generate_rule_corpus(const RuleCorpusScenario& sc) {
  sc.validate();
  SimRng rng(sc.seed);
  SyslogBundle b;
  b.topology = make_fat_tree(sc.topology);
  Topology topo(b.topology);
  const auto devices = devices_of(b.topology);

  char buf[16];
  std::vector<std::string> ids;
  for (int i = 0; i < sc.templates; ++i) {
    std::snprintf(buf, sizeof buf, "T%03d", i);
    const std::string id = buf;
    const std::string code = "EVT" + id.substr(1);
    const std::string phrase = kPhrases[i % std::size(kPhrases)];
    b.templates.push_back({id, code + " " + phrase + " on (\\S+) value (\\d+)",
                           static_cast<Layer>(i % 6), phrase, {"port", "value"},
                           {code + " " + phrase + " on eth1/1 value 7"}});
    ids.push_back(id);
  }
  auto raw = [&](int idx) {
    return "EVT" + ids[static_cast<std::size_t>(idx)].substr(1) + " " + kPhrases[idx % std::size(kPhrases)] +
           " on eth" + std::to_string(rng.uniform_int(1, 4)) + "/" + std::to_string(rng.uniform_int(1, 48)) +
           " value " + std::to_string(rng.uniform_int(0, 999));
  };
  const std::int64_t horizon_us = sc.horizon_s * 1'000'000;

  std::int64_t planted = 0;
  if (!sc.independent && sc.rules > 0) {
    std::vector<int> perm(static_cast<std::size_t>(sc.templates));
    for (int i = 0; i < sc.templates; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);
    const int n_inter = static_cast<int>(std::llround(sc.rules * sc.inter_fraction));
    for (int r = 0; r < sc.rules; ++r) {
      const int ci = perm[static_cast<std::size_t>(r)];
      const int ei = perm[static_cast<std::size_t>(sc.rules + r)];
      const bool inter = r < n_inter;
      b.rules.push_back({ids[static_cast<std::size_t>(ci)], ids[static_cast<std::size_t>(ei)],
                         inter ? RuleScope::kInterDevice : RuleScope::kIntraDevice, 1.0, 0});
      const std::int64_t n = rng.uniform_int(sc.causes_min, sc.causes_max);
      for (std::int64_t k = 0; k < n; ++k) {
        const std::string& d = devices[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(devices.size()) - 1))];
        const std::int64_t t = sc.start_us + rng.uniform_int(0, horizon_us - 1);
        b.messages.push_back(message(d, t, ids[static_cast<std::size_t>(ci)], raw(ci), static_cast<int>(rng.uniform_int(3, 6))));
        ++planted;
        if (!rng.bernoulli(sc.follow_prob)) continue;
        std::string target = d;
        if (inter) {
          const auto& nb = topo.neighbors(d);
          auto it = nb.begin();
          std::advance(it, rng.uniform_int(0, static_cast<std::int64_t>(nb.size()) - 1));
          target = *it;
        }
        const std::int64_t lag = rng.uniform_int(0, sc.max_lag_us);
        b.messages.push_back(message(target, t + lag, ids[static_cast<std::size_t>(ei)], raw(ei),
                                     static_cast<int>(rng.uniform_int(3, 6))));
        ++planted;
      }
    }
  }

  // Background: independent Poisson streams with log-normal rates.
  std::vector<double> weight(static_cast<std::size_t>(sc.templates));
  double total = 0;
  for (auto& w : weight) total += (w = rng.lognormal_median(1.0, 1.0));
  std::vector<double> cum;
  double acc = 0;
  for (double w : weight) cum.push_back(acc += w / total);
  const std::int64_t background = std::max<std::int64_t>(0, sc.messages - planted);
  for (std::int64_t k = 0; k < background; ++k) {
    const double u = rng.uniform();
    const int ti = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin()), cum.size() - 1));
    const std::string& d = devices[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(devices.size()) - 1))];
    const std::int64_t t = sc.start_us + rng.uniform_int(0, horizon_us - 1);
    b.messages.push_back(message(d, t, ids[static_cast<std::size_t>(ti)], raw(ti), static_cast<int>(rng.uniform_int(3, 6))));
  }
  sort_messages(b.messages);
  return b;
}

void CascadeScenario::validate() const {
  if (cascades < 0) throw ValidationError("cascades must be >= 0");
  if (tor_share < 0 || agg_share < 0 || tor_share + agg_share > 1) throw ValidationError("tier shares must sum to <= 1");
  if (spacing_us < 2'000'000) throw ValidationError("cascade spacing must be at least 2s");
}

CascadeBundle generate_cascades(const CascadeScenario& sc) {
  sc.validate();
  SimRng rng(sc.seed);
  CascadeBundle out;
  out.syslog.templates = standard_templates();
  out.syslog.rules = cascade_rules();
  out.syslog.topology = make_fat_tree(sc.topology);
  Topology topo(out.syslog.topology);
  std::map<Tier, std::vector<std::string>> by_tier;
  for (const auto& d : out.syslog.topology.devices) by_tier[d.tier].push_back(d.device_id);
  for (int c = 0; c < sc.cascades; ++c) {
    const double u = rng.uniform();
    const Tier tier = u < sc.tor_share ? Tier::kToR : (u < sc.tor_share + sc.agg_share ? Tier::kAgg : Tier::kCore);
    const auto& pool = by_tier[tier];
    if (pool.empty()) throw ValidationError("topology has no devices of tier " + std::string(to_string(tier)));
    const std::string& d = pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
    const std::int64_t t = sc.start_us + c * sc.spacing_us + rng.uniform_int(0, sc.spacing_us / 4);
    const std::int64_t t_ld = t + rng.uniform_int(50'000, 500'000);
    const auto& nb = topo.neighbors(d);
    auto it = nb.begin();
    std::advance(it, rng.uniform_int(0, static_cast<std::int64_t>(nb.size()) - 1));
    const std::int64_t t_if = t_ld + rng.uniform_int(50'000, 500'000);
    auto& m = out.syslog.messages;
    m.push_back(message(d, t, "MODULE_FAIL", raw_for("MODULE_FAIL", rng), severity_for("MODULE_FAIL")));
    m.push_back(message(d, t_ld, "LINK_DOWN", raw_for("LINK_DOWN", rng), severity_for("LINK_DOWN")));
    m.push_back(message(*it, t_if, "IF_CHANGE", raw_for("IF_CHANGE", rng), severity_for("IF_CHANGE")));
    out.truth.push_back({d, tier, t, {d, *it}});
  }
  sort_messages(out.syslog.messages);
  return out;
}

CascadeBundle multi_device_cascade(std::int64_t at_us) {
  SimRng rng(7);
  CascadeBundle out;
  out.syslog.templates = standard_templates();
  out.syslog.rules = cascade_rules();
  out.syslog.topology = make_fat_tree({2, 2, 2, 2, 2});
  const std::string tor = "tor0-0", agg = "agg0-0";
  auto& m = out.syslog.messages;
  m.push_back(message(tor, at_us, "MODULE_FAIL", raw_for("MODULE_FAIL", rng), severity_for("MODULE_FAIL")));
  m.push_back(message(tor, at_us + 200'000, "LINK_DOWN", raw_for("LINK_DOWN", rng), severity_for("LINK_DOWN")));
  m.push_back(message(tor, at_us + 400'000, "STP_CHANGE", raw_for("STP_CHANGE", rng), severity_for("STP_CHANGE")));
  m.push_back(message(agg, at_us + 600'000, "IF_CHANGE", raw_for("IF_CHANGE", rng), severity_for("IF_CHANGE")));
  out.truth.push_back({tor, Tier::kToR, at_us, {agg, tor}});
  return out;
}

CascadeBundle l2_flap(std::int64_t at_us, int flaps) {
  SimRng rng(11);
  CascadeBundle out;
  out.syslog.templates = standard_templates();
  out.syslog.rules = cascade_rules();
  out.syslog.topology = make_fat_tree({2, 2, 2, 2, 2});
  const std::string tor = "tor0-1";
  for (int i = 0; i < flaps; ++i) {
    const std::int64_t t = at_us + i * 4'000'000LL;
    out.syslog.messages.push_back(message(tor, t, "LINK_DOWN", raw_for("LINK_DOWN", rng), severity_for("LINK_DOWN")));
    out.syslog.messages.push_back(message(tor, t + 1'000'000, "LINK_UP", raw_for("LINK_UP", rng), severity_for("LINK_UP")));
  }
  out.truth.push_back({tor, Tier::kToR, at_us, {tor}});
  return out;
}

// ---------------------------------------------------------------------------
// Scenario files

namespace {

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ValidationError("unknown key '" + k + "' in " + where);
    }
  }
}

template <class T>
void opt(const Json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

FatTreeParams fat_tree_from(const Json& j, FatTreeParams p) {
  check_keys(j, {"pods", "tors_per_pod", "aggs_per_pod", "cores", "hosts_per_tor"}, "topology");
  opt(j, "pods", p.pods);
  opt(j, "tors_per_pod", p.tors_per_pod);
  opt(j, "aggs_per_pod", p.aggs_per_pod);
  opt(j, "cores", p.cores);
  opt(j, "hosts_per_tor", p.hosts_per_tor);
  return p;
}

CallSpec call_from(const Json& j) {
  check_keys(j, {"service", "compute_ms", "sigma", "fanout", "k", "request_bytes", "response_bytes", "calls"}, "call");
  CallSpec c;
  c.service = j.at("service").get<std::string>();
  opt(j, "compute_ms", c.compute.median_ms);
  opt(j, "sigma", c.compute.sigma);
  opt(j, "fanout", c.fanout);
  opt(j, "k", c.k);
  opt(j, "request_bytes", c.request_bytes);
  opt(j, "response_bytes", c.response_bytes);
  if (j.contains("calls")) {
    for (const auto& ch : j.at("calls")) c.calls.push_back(call_from(ch));
  }
  return c;
}

ServingScenario serving_from(const Json& j, std::uint64_t seed) {
  check_keys(j, {"seed", "sessions", "interarrival_ms", "start_us", "page", "topology", "placement", "blueprint",
                 "random_blueprints", "random_services", "random_depth", "random_fanout", "prop_us", "bytes_per_us",
                 "jitter_mean_us", "clock_offset_max_us", "arrival_delay_mean_ms", "loss_rate", "duplication_rate",
                 "shuffle", "navtiming", "slow_service", "link_queues", "volume_drop", "cdn"},
             "serving");
  ServingScenario s;
  s.seed = seed;
  opt(j, "seed", s.seed);
  opt(j, "sessions", s.sessions);
  opt(j, "interarrival_ms", s.interarrival_ms);
  opt(j, "start_us", s.start_us);
  opt(j, "page", s.page);
  if (j.contains("topology")) s.topology = fat_tree_from(j.at("topology"), s.topology);
  if (j.contains("placement")) s.placement = j.at("placement").get<std::map<std::string, std::string>>();
  if (j.contains("blueprint")) s.blueprint = call_from(j.at("blueprint"));
  opt(j, "random_blueprints", s.random_blueprints);
  opt(j, "random_services", s.random_services);
  opt(j, "random_depth", s.random_depth);
  opt(j, "random_fanout", s.random_fanout);
  opt(j, "prop_us", s.prop_us);
  opt(j, "bytes_per_us", s.bytes_per_us);
  opt(j, "jitter_mean_us", s.jitter_mean_us);
  opt(j, "clock_offset_max_us", s.clock_offset_max_us);
  opt(j, "arrival_delay_mean_ms", s.arrival_delay_mean_ms);
  opt(j, "loss_rate", s.loss_rate);
  opt(j, "duplication_rate", s.duplication_rate);
  opt(j, "shuffle", s.shuffle);
  opt(j, "navtiming", s.navtiming);
  if (j.contains("slow_service")) {
    const auto& x = j.at("slow_service");
    check_keys(x, {"service", "extra_ms", "fraction"}, "slow_service");
    SlowService ss;
    ss.service = x.at("service").get<std::string>();
    opt(x, "extra_ms", ss.extra_ms);
    opt(x, "fraction", ss.fraction);
    s.slow = ss;
  }
  if (j.contains("link_queues")) {
    for (const auto& x : j.at("link_queues")) {
      check_keys(x, {"from_service", "to_service", "min_ms", "max_ms", "fraction"}, "link_queues");
      LinkQueue q;
      q.from_service = x.at("from_service").get<std::string>();
      q.to_service = x.at("to_service").get<std::string>();
      opt(x, "min_ms", q.min_ms);
      opt(x, "max_ms", q.max_ms);
      opt(x, "fraction", q.fraction);
      s.queues.push_back(q);
    }
  }
  if (j.contains("volume_drop")) {
    const auto& x = j.at("volume_drop");
    check_keys(x, {"service", "start_ms", "end_ms", "keep"}, "volume_drop");
    VolumeDrop v;
    v.service = x.at("service").get<std::string>();
    opt(x, "start_ms", v.start_ms);
    opt(x, "end_ms", v.end_ms);
    opt(x, "keep", v.keep);
    s.volume_drop = v;
  }
  if (j.contains("cdn")) {
    const auto& x = j.at("cdn");
    check_keys(x, {"enabled", "users", "edge_service", "origin_service", "internet_fraction", "stack_delay_max_ms"}, "cdn");
    s.cdn.enabled = true;
    opt(x, "enabled", s.cdn.enabled);
    opt(x, "users", s.cdn.users);
    opt(x, "edge_service", s.cdn.edge_service);
    opt(x, "origin_service", s.cdn.origin_service);
    opt(x, "internet_fraction", s.cdn.internet_fraction);
    opt(x, "stack_delay_max_ms", s.cdn.stack_delay_max_ms);
  }
  s.validate();
  return s;
}

RuleCorpusScenario rules_from(const Json& j, std::uint64_t seed) {
  check_keys(j, {"seed", "topology", "templates", "rules", "messages", "horizon_s", "inter_fraction", "follow_prob",
                 "max_lag_us", "causes_min", "causes_max", "independent", "start_us"},
             "syslog_rules");
  RuleCorpusScenario s;
  s.seed = seed;
  opt(j, "seed", s.seed);
  if (j.contains("topology")) s.topology = fat_tree_from(j.at("topology"), s.topology);
  opt(j, "templates", s.templates);
  opt(j, "rules", s.rules);
  opt(j, "messages", s.messages);
  opt(j, "horizon_s", s.horizon_s);
  opt(j, "inter_fraction", s.inter_fraction);
  opt(j, "follow_prob", s.follow_prob);
  opt(j, "max_lag_us", s.max_lag_us);
  opt(j, "causes_min", s.causes_min);
  opt(j, "causes_max", s.causes_max);
  opt(j, "independent", s.independent);
  opt(j, "start_us", s.start_us);
  s.validate();
  return s;
}

CascadeScenario cascades_from(const Json& j, std::uint64_t seed) {
  check_keys(j, {"seed", "topology", "cascades", "tor_share", "agg_share", "spacing_us", "start_us"}, "cascades");
  CascadeScenario s;
  s.seed = seed;
  opt(j, "seed", s.seed);
  if (j.contains("topology")) s.topology = fat_tree_from(j.at("topology"), s.topology);
  opt(j, "cascades", s.cascades);
  opt(j, "tor_share", s.tor_share);
  opt(j, "agg_share", s.agg_share);
  opt(j, "spacing_us", s.spacing_us);
  opt(j, "start_us", s.start_us);
  s.validate();
  return s;
}

}  // namespace

ScenarioFile parse_scenario(const Json& j) {
  try {
    check_keys(j, {"seed", "serving", "syslog_rules", "cascades"}, "scenario");
    const std::uint64_t seed = j.value("seed", std::uint64_t{1});
    ScenarioFile f;
    if (j.contains("serving")) f.serving = serving_from(j.at("serving"), seed);
    if (j.contains("syslog_rules")) f.rules = rules_from(j.at("syslog_rules"), seed);
    if (j.contains("cascades")) f.cascades = cascades_from(j.at("cascades"), seed);
    if (!f.serving && !f.rules && !f.cascades) throw ValidationError("scenario generates nothing");
    return f;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("scenario: ") + e.what());
  }
}

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot read scenario " + path);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError("scenario " + path + " is not valid JSON");
  return parse_scenario(j);
}

Json truth_to_json(const SessionTruth& t) {
  Json rpcs = Json::array();
  for (const auto& r : t.rpcs) {
    Json x{{"rpc_id", rpc_hex(r.rpc_id)}, {"parent_rpc_id", rpc_hex(r.parent_rpc_id)}, {"caller", r.caller},
           {"callee", r.callee}, {"injected_queue_us", r.injected_queue_us}};
    if (r.bottleneck) {
      x["bottleneck"] = to_string(*r.bottleneck);
      x["stack_delay_us"] = r.stack_delay_us;
    }
    rpcs.push_back(x);
  }
  Json ser = Json::array();
  for (const auto& [a, b] : t.serialization) ser.push_back({rpc_hex(a), rpc_hex(b)});
  Json contrib = Json::array(), late = Json::array();
  for (RpcId r : t.contributors) contrib.push_back(rpc_hex(r));
  for (RpcId r : t.late) late.push_back(rpc_hex(r));
  return Json{{"type", "truth"},
              {"v", kFormatVersion},
              {"session_id", t.session_id},
              {"start_us", t.start_us},
              {"e2e_us", t.e2e_us},
              {"rpcs", rpcs},
              {"serialization", ser},
              {"contributors", contrib},
              {"late", late},
              {"path_compute_us", t.path_compute_us},
              {"slow_injected", t.slow_injected},
              {"slow_on_path", t.slow_on_path},
              {"events", t.events},
              {"lost", t.lost},
              {"duplicated", t.duplicated}};
}

void write_bundle(const ScenarioFile& sc, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(fs::path(dir) / name, std::ios::trunc);
    if (!f) throw Error(std::string("cannot write ") + name);
    return f;
  };
  std::optional<TopologySnapshot> topology;
  if (sc.serving) {
    SessionBundle b = generate_sessions(*sc.serving);
    auto ev = open("events.jsonl");
    for (const auto& r : b.records) ev << sim_record_line(r) << '\n';
    auto tr = open("truth.jsonl");
    for (const auto& t : b.truth) tr << truth_to_json(t).dump() << '\n';
    topology = b.topology;
  }
  std::vector<SyslogMessage> messages;
  std::vector<Template> templates;
  if (sc.rules) {
    SyslogBundle b = generate_rule_corpus(*sc.rules);
    messages = b.messages;
    templates = b.templates;
    auto f = open("planted_rules.jsonl");
    for (const auto& r : b.rules) f << to_jsonl(r) << '\n';
    if (!topology) topology = b.topology;
  }
  if (sc.cascades) {
    CascadeBundle b = generate_cascades(*sc.cascades);
    messages.insert(messages.end(), b.syslog.messages.begin(), b.syslog.messages.end());
    for (const auto& t : b.syslog.templates) templates.push_back(t);
    auto f = open("cascade_rules.jsonl");
    for (const auto& r : b.syslog.rules) f << to_jsonl(r) << '\n';
    auto g = open("cascade_truth.jsonl");
    for (const auto& t : b.truth) {
      g << Json{{"type", "cascade_truth"}, {"v", kFormatVersion}, {"root_device", t.root_device},
                {"tier", to_string(t.tier)}, {"at_us", t.at_us}, {"devices", t.devices}}
               .dump()
        << '\n';
    }
    if (!topology) topology = b.syslog.topology;
  }
  if (!messages.empty() || sc.rules || sc.cascades) {
    sort_messages(messages);
    auto f = open("syslog.log");
    for (const auto& m : messages) f << format_syslog_line(m) << '\n';
    auto t = open("templates.jsonl");
    for (const auto& x : templates) t << to_jsonl(x) << '\n';
  }
  if (topology) {
    auto f = open("topology.json");
    f << to_jsonl(*topology) << '\n';
  }
}

}  // namespace tracekit
