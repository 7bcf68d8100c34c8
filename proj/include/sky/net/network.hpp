#pragma once

// Deterministic network emulation: two subnets with configurable impairment
// (latency, jitter, loss, bandwidth), per-vehicle pub/sub domains, the
// telemetry fan-out router and the cross-domain topic bridge.
//
// Impairment draws come from per-(link, source-domain) seeded streams so a
// vehicle's traffic never perturbs another vehicle's draws.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "sky/net/wire.hpp"
#include "sky/rng.hpp"
#include "sky/sim/kernel.hpp"

namespace sky::net {

struct PayloadTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LinkSpec {
  double latency_ms{0.0};
  double jitter_ms{0.0};
  double loss_prob{0.0};
  std::optional<double> bandwidth_bps;
  bool reorder_allowed{false};

  // The intra-vehicle "cabling" network.
  static LinkSpec sim_subnet() { return {0.2, 0.0, 0.0, std::nullopt, false}; }
  // The inter-vehicle / ground "radio" network.
  static LinkSpec air_subnet() { return {20.0, 5.0, 0.05, 1e6, true}; }
  static LinkSpec ideal() { return {0.0, 0.0, 0.0, std::nullopt, false}; }
};

struct LinkStats {
  int64_t sent{0};
  int64_t delivered{0};
  int64_t dropped{0};
  int64_t bytes_sent{0};
};

// Envelope flag bits.
inline constexpr uint8_t kFlagBridged = 0x01;

inline constexpr const char* kSimLink = "sim";
inline constexpr const char* kAirLink = "air";
inline constexpr DomainId kGroundDomain = 0;

class Network {
 public:
  explicit Network(const RngHierarchy& rngs);

  void add_link(const std::string& name, LinkSpec spec);
  bool has_link(const std::string& name) const { return links_.count(name) > 0; }
  const LinkSpec& link_spec(const std::string& name) const;

  NodeId add_node(std::string name, DomainId domain, bool remote = false);
  DomainId node_domain(NodeId id) const;
  const std::string& node_name(NodeId id) const;
  bool node_remote(NodeId id) const;
  void set_node_remote(NodeId id, bool remote);

  // Topic subscription within the node's own domain. A trailing '*' makes the
  // pattern a prefix match.
  void subscribe(NodeId node, const std::string& topic_pattern);
  void subscribe_fn(NodeId node, const std::string& topic_pattern,
                    std::function<void(const Envelope&)> fn);

  // Broadcast within the source node's domain over `link`.
  void publish(NodeId src, const std::string& topic, std::vector<uint8_t> payload,
               sim::SimTime now, const std::string& link = kSimLink);
  // Same, but into an explicit domain (bridge re-publication path).
  void publish_into(NodeId src, DomainId domain, const std::string& topic,
                    std::vector<uint8_t> payload, sim::SimTime now,
                    const std::string& link, uint8_t flags = 0);
  // Addressed point-to-point rail (telemetry, commands); crosses domains by
  // construction, like the physical cabling it stands in for.
  void unicast(NodeId src, NodeId dst, const std::string& topic,
               std::vector<uint8_t> payload, sim::SimTime now,
               const std::string& link);

  // Raw send of a prebuilt envelope (seq is assigned here).
  void send(Envelope env, const std::string& link, sim::SimTime now);

  // Delivers everything due at sim time <= t, in deterministic order.
  void drain(sim::SimTime t);

  std::deque<Envelope>& inbox(NodeId node);

  const LinkStats& stats(const std::string& link) const;
  // Cross-domain pub/sub deliveries observed (isolation property probe).
  int64_t cross_domain_deliveries() const { return cross_domain_deliveries_; }

  // Deliveries destined to remote-hosted nodes accumulate here instead of
  // inboxes; the UDP transport ships them once per tick.
  std::vector<Envelope> take_remote_batch();

  size_t pending() const { return heap_.size(); }

 private:
  struct Subscription {
    std::string pattern;
    std::function<void(const Envelope&)> fn;  // null -> inbox
  };
  struct NodeRec {
    std::string name;
    DomainId domain;
    bool remote{false};
    std::deque<Envelope> inbox;
    std::vector<Subscription> subs;
  };
  struct Link {
    LinkSpec spec;
    LinkStats stats;
    int64_t busy_until_ns{0};
    std::map<DomainId, Rng> rng_by_src_domain;
    // FIFO clamp per (src, topic, dst) when reordering is not allowed.
    std::map<std::tuple<NodeId, std::string, NodeId>, int64_t> last_delivery_ns;
  };
  struct Delivery {
    int64_t at_ns;
    uint64_t order;
    std::shared_ptr<const Envelope> env;
    NodeId dst;
    Link* link;  // stats attribution; map nodes are pointer-stable
    bool operator>(const Delivery& o) const {
      return std::tie(at_ns, order) > std::tie(o.at_ns, o.order);
    }
  };

  static bool topic_matches(const std::string& pattern, const std::string& topic);
  Rng& link_rng(Link& link, const std::string& name, DomainId src_domain);
  void schedule(Link& link, const std::string& link_name,
                std::shared_ptr<const Envelope> env, NodeId dst, sim::SimTime now);
  void deliver(const Envelope& env, NodeId dst);

  const RngHierarchy& rngs_;
  std::map<std::string, Link> links_;
  std::vector<NodeRec> nodes_;
  std::map<std::pair<NodeId, std::string>, uint32_t> seq_;
  std::priority_queue<Delivery, std::vector<Delivery>, std::greater<>> heap_;
  uint64_t order_counter_{0};
  std::vector<Envelope> remote_batch_;
  int64_t cross_domain_deliveries_{0};
};

// Telemetry fan-out: duplicates every inbound telemetry envelope to all
// registered sinks, preserving per-source order.
class TelemetryRouter {
 public:
  TelemetryRouter(Network& net, NodeId self);

  void add_sink(NodeId sink, const std::string& link = kSimLink);
  void step(sim::SimTime now);

  int64_t forwarded() const { return forwarded_; }
  int64_t skipped() const { return skipped_; }

 private:
  Network& net_;
  NodeId self_;
  struct Sink {
    NodeId node;
    std::string link;
  };
  std::vector<Sink> sinks_;
  int64_t forwarded_{0};
  int64_t skipped_{0};
};

enum class BridgeDirection : uint8_t {
  Up,     // vehicle domains -> ground
  Down,   // ground -> vehicle domains
  Cross,  // any domain -> every other attached domain
};

struct BridgeRule {
  std::string pattern;
  BridgeDirection direction{BridgeDirection::Cross};
  std::vector<DomainId> src_domains;  // empty = any
  std::vector<DomainId> dst_domains;  // empty = per direction
};

// Replicates matching topics across otherwise isolated domains,
// re-enveloping with the bridge as src. The original (src, seq) pair is
// prepended to the payload for end-to-end loss accounting.
class Bridge {
 public:
  Bridge(Network& net, std::vector<DomainId> domains, std::vector<BridgeRule> rules);

  void set_enabled(bool on) { enabled_ = on; }
  bool enabled() const { return enabled_; }
  void step(sim::SimTime now);

  static std::vector<BridgeRule> default_rules();
  // Strips the 6-byte bridged-origin header. Returns orig (src, seq).
  static std::pair<NodeId, uint32_t> strip_origin(const Envelope& env,
                                                  io::Reader& payload);

  NodeId endpoint(DomainId d) const { return endpoints_.at(d); }

 private:
  Network& net_;
  std::vector<DomainId> domains_;
  std::vector<BridgeRule> rules_;
  std::map<DomainId, NodeId> endpoints_;
  bool enabled_{true};
};

// Subnet + bridge-rule configuration, loadable from JSON.
struct NetConfig {
  LinkSpec sim{LinkSpec::ideal()};
  LinkSpec air{LinkSpec::ideal()};
  std::vector<BridgeRule> bridge_rules{Bridge::default_rules()};

  // "ideal", "air-preset", or a JSON file path.
  static NetConfig from_arg(const std::string& arg);
  static NetConfig from_json_file(const std::string& path);
};

}  // namespace sky::net
