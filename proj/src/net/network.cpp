#include "sky/net/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "sky/io.hpp"

namespace sky::net {

Network::Network(const RngHierarchy& rngs) : rngs_(rngs) {
  // Node id 0 is reserved so that "no node" is representable.
  nodes_.push_back(NodeRec{"reserved", 0, false, {}, {}});
}

void Network::add_link(const std::string& name, LinkSpec spec) {
  Link link;
  link.spec = spec;
  links_[name] = std::move(link);
}

const LinkSpec& Network::link_spec(const std::string& name) const {
  return links_.at(name).spec;
}

NodeId Network::add_node(std::string name, DomainId domain, bool remote) {
  if (nodes_.size() >= kBroadcast)
    throw std::length_error("node id space exhausted");
  nodes_.push_back(NodeRec{std::move(name), domain, remote, {}, {}});
  return static_cast<NodeId>(nodes_.size() - 1);
}

DomainId Network::node_domain(NodeId id) const { return nodes_.at(id).domain; }
const std::string& Network::node_name(NodeId id) const { return nodes_.at(id).name; }
bool Network::node_remote(NodeId id) const { return nodes_.at(id).remote; }
void Network::set_node_remote(NodeId id, bool remote) { nodes_.at(id).remote = remote; }

void Network::subscribe(NodeId node, const std::string& topic_pattern) {
  nodes_.at(node).subs.push_back(Subscription{topic_pattern, nullptr});
}

void Network::subscribe_fn(NodeId node, const std::string& topic_pattern,
                           std::function<void(const Envelope&)> fn) {
  nodes_.at(node).subs.push_back(Subscription{topic_pattern, std::move(fn)});
}

bool Network::topic_matches(const std::string& pattern, const std::string& topic) {
  if (!pattern.empty() && pattern.back() == '*')
    return topic.compare(0, pattern.size() - 1, pattern, 0, pattern.size() - 1) == 0;
  return pattern == topic;
}

Rng& Network::link_rng(Link& link, const std::string& name, DomainId src_domain) {
  auto it = link.rng_by_src_domain.find(src_domain);
  if (it == link.rng_by_src_domain.end()) {
    it = link.rng_by_src_domain
             .emplace(src_domain, rngs_.stream("net." + name, src_domain))
             .first;
  }
  return it->second;
}

void Network::send(Envelope env, const std::string& link_name, sim::SimTime now) {
  if (env.payload.size() > kMaxPayload)
    throw PayloadTooLarge("payload " + std::to_string(env.payload.size()) + " bytes");
  auto lit = links_.find(link_name);
  if (lit == links_.end()) throw std::out_of_range("unknown link " + link_name);
  Link& link = lit->second;

  env.seq = seq_[{env.src, env.topic}]++;
  env.send_sim_time_ns = now;

  link.stats.sent += 1;
  link.stats.bytes_sent += static_cast<int64_t>(wire_size(env));

  // Serialization delay: one FIFO token bucket per link.
  int64_t base_ready = now;
  if (link.spec.bandwidth_bps && *link.spec.bandwidth_bps > 0.0) {
    const double tx_ns = static_cast<double>(wire_size(env)) * 8.0 * 1e9 /
                         *link.spec.bandwidth_bps;
    link.busy_until_ns = std::max(link.busy_until_ns, now) + std::llround(tx_ns);
    base_ready = link.busy_until_ns;
  }

  const DomainId src_domain = env.domain;
  auto sp = std::make_shared<const Envelope>(std::move(env));

  // Resolve receivers now, in ascending node id, so draw order is stable.
  std::vector<NodeId> receivers;
  if (sp->dst == kBroadcast) {
    for (NodeId id = 1; id < static_cast<NodeId>(nodes_.size()); ++id) {
      if (id == sp->src) continue;
      const NodeRec& n = nodes_[id];
      if (n.domain != sp->domain) continue;
      for (const auto& sub : n.subs) {
        if (topic_matches(sub.pattern, sp->topic)) {
          receivers.push_back(id);
          break;
        }
      }
    }
  } else {
    receivers.push_back(sp->dst);
  }

  Rng& rng = link_rng(link, link_name, src_domain);
  const int64_t latency_ns = std::llround(link.spec.latency_ms * 1e6);
  for (const NodeId dst : receivers) {
    if (link.spec.loss_prob > 0.0 && rng.chance(link.spec.loss_prob)) {
      link.stats.dropped += 1;
      continue;
    }
    int64_t jitter_ns = 0;
    if (link.spec.jitter_ms > 0.0)
      jitter_ns = std::llround(rng.uniform(0.0, link.spec.jitter_ms) * 1e6);

    int64_t at = base_ready + latency_ns + jitter_ns;
    if (!link.spec.reorder_allowed) {
      auto key = std::make_tuple(sp->src, sp->topic, dst);
      auto& last = link.last_delivery_ns[key];
      at = std::max(at, last);
      last = at;
    }
    heap_.push(Delivery{at, order_counter_++, sp, dst, &link});
  }
}

void Network::publish(NodeId src, const std::string& topic,
                      std::vector<uint8_t> payload, sim::SimTime now,
                      const std::string& link) {
  publish_into(src, nodes_.at(src).domain, topic, std::move(payload), now, link, 0);
}

void Network::publish_into(NodeId src, DomainId domain, const std::string& topic,
                           std::vector<uint8_t> payload, sim::SimTime now,
                           const std::string& link, uint8_t flags) {
  Envelope env;
  env.src = src;
  env.dst = kBroadcast;
  env.domain = domain;
  env.topic = topic;
  env.payload = std::move(payload);
  env.flags = flags;
  send(std::move(env), link, now);
}

void Network::unicast(NodeId src, NodeId dst, const std::string& topic,
                      std::vector<uint8_t> payload, sim::SimTime now,
                      const std::string& link) {
  Envelope env;
  env.src = src;
  env.dst = dst;
  env.domain = nodes_.at(src).domain;
  env.topic = topic;
  env.payload = std::move(payload);
  send(std::move(env), link, now);
}

void Network::deliver(const Envelope& env, NodeId dst) {
  if (dst >= nodes_.size()) return;  // sink disappeared; drop silently
  NodeRec& node = nodes_[dst];

  if (env.dst == kBroadcast && node.domain != env.domain) ++cross_domain_deliveries_;

  if (node.remote) {
    remote_batch_.push_back(env);
    return;
  }
  bool handled = false;
  for (const auto& sub : node.subs) {
    if (sub.fn && topic_matches(sub.pattern, env.topic)) {
      sub.fn(env);
      handled = true;
    }
  }
  if (!handled) node.inbox.push_back(env);
}

void Network::drain(sim::SimTime t) {
  while (!heap_.empty() && heap_.top().at_ns <= t) {
    const Delivery d = heap_.top();
    heap_.pop();
    d.link->stats.delivered += 1;
    deliver(*d.env, d.dst);
  }
}

std::deque<Envelope>& Network::inbox(NodeId node) { return nodes_.at(node).inbox; }

const LinkStats& Network::stats(const std::string& link) const {
  return links_.at(link).stats;
}

std::vector<Envelope> Network::take_remote_batch() {
  std::vector<Envelope> out;
  out.swap(remote_batch_);
  return out;
}

// ---------------------------------------------------------------------------

TelemetryRouter::TelemetryRouter(Network& net, NodeId self) : net_(net), self_(self) {}

void TelemetryRouter::add_sink(NodeId sink, const std::string& link) {
  sinks_.push_back(Sink{sink, link});
}

void TelemetryRouter::step(sim::SimTime now) {
  auto& in = net_.inbox(self_);
  while (!in.empty()) {
    Envelope env = std::move(in.front());
    in.pop_front();
    ++forwarded_;
    for (const auto& sink : sinks_) {
      if (sink.node == 0 || sink.node == self_) {
        ++skipped_;
        continue;
      }
      net_.unicast(self_, sink.node, env.topic, env.payload, now, sink.link);
    }
  }
}

// ---------------------------------------------------------------------------

Bridge::Bridge(Network& net, std::vector<DomainId> domains, std::vector<BridgeRule> rules)
    : net_(net), domains_(std::move(domains)), rules_(std::move(rules)) {
  for (const DomainId d : domains_) {
    const NodeId ep = net_.add_node("bridge.d" + std::to_string(d), d);
    endpoints_[d] = ep;
    for (const auto& rule : rules_) net_.subscribe(ep, rule.pattern);
  }
}

std::vector<BridgeRule> Bridge::default_rules() {
  return {
      BridgeRule{"/state_drone_*", BridgeDirection::Cross, {}, {}},
      BridgeRule{"/tracks", BridgeDirection::Down, {}, {}},
  };
}

void Bridge::step(sim::SimTime now) {
  for (const DomainId d : domains_) {
    auto& in = net_.inbox(endpoints_.at(d));
    while (!in.empty()) {
      Envelope env = std::move(in.front());
      in.pop_front();
      if (!enabled_) continue;
      if (env.flags & kFlagBridged) continue;  // never re-bridge

      std::vector<DomainId> dests;
      for (const auto& rule : rules_) {
        if (!topic_matches(rule.pattern, env.topic)) continue;
        if (!rule.src_domains.empty() &&
            std::find(rule.src_domains.begin(), rule.src_domains.end(), env.domain) ==
                rule.src_domains.end())
          continue;

        if (!rule.dst_domains.empty()) {
          dests.insert(dests.end(), rule.dst_domains.begin(), rule.dst_domains.end());
        } else {
          switch (rule.direction) {
            case BridgeDirection::Up:
              if (env.domain != kGroundDomain) dests.push_back(kGroundDomain);
              break;
            case BridgeDirection::Down:
              if (env.domain == kGroundDomain) {
                for (const DomainId dd : domains_)
                  if (dd != kGroundDomain) dests.push_back(dd);
              }
              break;
            case BridgeDirection::Cross:
              for (const DomainId dd : domains_)
                if (dd != env.domain) dests.push_back(dd);
              break;
          }
        }
      }
      std::sort(dests.begin(), dests.end());
      dests.erase(std::unique(dests.begin(), dests.end()), dests.end());

      for (const DomainId dd : dests) {
        if (dd == env.domain) continue;
        std::vector<uint8_t> payload;
        payload.reserve(6 + env.payload.size());
        io::Writer w(payload);
        w.u16(env.src);
        w.u32(env.seq);
        w.bytes(env.payload.data(), env.payload.size());
        net_.publish_into(endpoints_.at(dd), dd, env.topic, std::move(payload), now,
                          kAirLink, kFlagBridged);
      }
    }
  }
}

std::pair<NodeId, uint32_t> Bridge::strip_origin(const Envelope& env,
                                                 io::Reader& payload) {
  if (!(env.flags & kFlagBridged)) return {env.src, env.seq};
  const NodeId orig_src = payload.u16();
  const uint32_t orig_seq = payload.u32();
  return {orig_src, orig_seq};
}

// ---------------------------------------------------------------------------

namespace {

LinkSpec link_from_json(const nlohmann::json& j) {
  LinkSpec spec;
  spec.latency_ms = j.value("latency_ms", 0.0);
  spec.jitter_ms = j.value("jitter_ms", 0.0);
  spec.loss_prob = j.value("loss_prob", 0.0);
  if (j.contains("bandwidth_bps") && !j["bandwidth_bps"].is_null())
    spec.bandwidth_bps = j["bandwidth_bps"].get<double>();
  spec.reorder_allowed = j.value("reorder_allowed", false);
  return spec;
}

BridgeDirection direction_from_string(const std::string& s) {
  if (s == "up") return BridgeDirection::Up;
  if (s == "down") return BridgeDirection::Down;
  if (s == "cross") return BridgeDirection::Cross;
  throw std::invalid_argument("bridge direction must be up|down|cross, got " + s);
}

}  // namespace

NetConfig NetConfig::from_arg(const std::string& arg) {
  if (arg == "ideal") return NetConfig{};
  if (arg == "air-preset") {
    NetConfig cfg;
    cfg.sim = LinkSpec::sim_subnet();
    cfg.air = LinkSpec::air_subnet();
    return cfg;
  }
  return from_json_file(arg);
}

NetConfig NetConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open net config " + path);
  nlohmann::json j;
  in >> j;

  NetConfig cfg;
  if (j.contains("links")) {
    if (j["links"].contains("sim")) cfg.sim = link_from_json(j["links"]["sim"]);
    if (j["links"].contains("air")) cfg.air = link_from_json(j["links"]["air"]);
  }
  if (j.contains("bridge_rules")) {
    cfg.bridge_rules.clear();
    for (const auto& r : j["bridge_rules"]) {
      BridgeRule rule;
      rule.pattern = r.at("pattern").get<std::string>();
      rule.direction = direction_from_string(r.value("direction", "cross"));
      if (r.contains("src_domains"))
        for (const auto& d : r["src_domains"]) rule.src_domains.push_back(d.get<DomainId>());
      if (r.contains("dst_domains"))
        for (const auto& d : r["dst_domains"]) rule.dst_domains.push_back(d.get<DomainId>());
      cfg.bridge_rules.push_back(std::move(rule));
    }
  }
  return cfg;
}

}  // namespace sky::net
