#pragma once

#include "eolsr/scenario.hpp"

#include <array>
#include <filesystem>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eolsr::olsr
{
    inline constexpr int kWillNever = 0;
    inline constexpr int kWillAlways = 7;
    inline constexpr std::size_t kGeneCount = 8;

    // The eight tunable protocol parameters, in seconds except willingness.
    struct OlsrConfig
    {
        double hello_interval = 2.0;
        double refresh_interval = 2.0;
        double tc_interval = 5.0;
        int willingness = 3;
        double neighb_hold_time = 6.0;
        double top_hold_time = 15.0;
        double mid_hold_time = 15.0;
        double dup_hold_time = 30.0;

        // Throws ValidationError when a field is outside its allowed range.
        void validate() const;

        friend bool operator==(const OlsrConfig&, const OlsrConfig&) = default;
    };

    OlsrConfig rfc_default();

    // The configuration reported as the best energy-aware setting found on the
    // medium urban scenario; used as a fixed comparison point.
    OlsrConfig reference_best();

    using Genome = std::array<double, kGeneCount>;

    // Gene order: hello, refresh, tc, willingness, neighb_hold, mid_hold, top_hold, dup_hold.
    enum Gene : std::size_t
    {
        kHello = 0,
        kRefresh = 1,
        kTc = 2,
        kWillingness = 3,
        kNeighbHold = 4,
        kMidHold = 5,
        kTopHold = 6,
        kDupHold = 7,
    };

    struct GeneBounds
    {
        double min;
        double max;
        double rfc_default;
        bool integer = false;

        double span() const noexcept { return max - min; }
    };

    struct ParamSpace
    {
        std::array<GeneBounds, kGeneCount> genes;

        static const ParamSpace& standard();

        // Clamps into range and rounds integer genes.
        double repair(std::size_t gene, double value) const;
        Genome repair(Genome genome) const;
        bool contains(const Genome& genome) const;
        Genome rfc_genome() const;
    };

    std::string_view gene_name(std::size_t gene);

    // Throws ValidationError for non-finite genes. Values are repaired into the space.
    OlsrConfig decode_genome(std::span<const double> genes, const ParamSpace& space = ParamSpace::standard());
    Genome encode_genome(const OlsrConfig& config);

    // JSON object keyed by the eight field names.
    std::string config_to_json(const OlsrConfig& config);
    // Missing keys are a ConfigError; the result is validated.
    OlsrConfig config_from_json(std::string_view json_text);
    OlsrConfig load_config_file(const std::filesystem::path& path);

    // HELLO emission period: every link must be re-advertised within REFRESH_INTERVAL.
    double hello_emission_interval(const OlsrConfig& config);

    // ------------------------------------------------------------ messages

    enum class LinkCode : std::uint8_t
    {
        Asym,
        Sym,
        Mpr, // symmetric, and selected as MPR by the sender
    };

    struct HelloEntry
    {
        NodeId neighbor;
        LinkCode code;
    };

    enum class MessageKind : std::uint8_t
    {
        Hello,
        Tc,
    };

    inline constexpr int kHelloHeaderBytes = 24;
    inline constexpr int kHelloEntryBytes = 8;
    inline constexpr int kTcHeaderBytes = 20;
    inline constexpr int kTcEntryBytes = 4;

    struct ControlMessage
    {
        MessageKind kind = MessageKind::Hello;
        NodeId originator = 0;
        NodeId sender = 0;
        std::uint32_t seq_no = 0;
        int willingness = 3; // originator's own, HELLO only
        std::vector<HelloEntry> hello_entries;
        std::vector<NodeId> tc_selectors;

        // Bytes on the air.
        int size() const noexcept
        {
            return kind == MessageKind::Hello
                       ? kHelloHeaderBytes + kHelloEntryBytes * static_cast<int>(hello_entries.size())
                       : kTcHeaderBytes + kTcEntryBytes * static_cast<int>(tc_selectors.size());
        }
    };

    // --------------------------------------------------------------- state

    struct LinkTuple
    {
        bool symmetric = false;
        double expiry = 0.0;
        int willingness = 3;
    };

    struct TopologyTuple
    {
        std::uint32_t seq_no = 0;
        double expiry = 0.0;
    };

    struct Route
    {
        NodeId next_hop;
        int hops;

        friend bool operator==(const Route&, const Route&) = default;
    };

    using RoutingTable = std::map<NodeId, Route>;

    struct NodeState
    {
        NodeId id = 0;
        std::map<NodeId, LinkTuple> link_set;
        // neighbor -> (two-hop node -> expiry)
        std::map<NodeId, std::map<NodeId, double>> two_hop_set;
        std::set<NodeId> mpr_set; // stale while mprs_dirty; see current_mprs()
        bool mprs_dirty = false;
        std::map<NodeId, double> mpr_selector_set;
        // (dest, last_hop) -> tuple
        std::map<std::pair<NodeId, NodeId>, TopologyTuple> topology_set;
        // (originator, seq) -> expiry
        std::map<std::pair<NodeId, std::uint32_t>, double> duplicate_set;
        RoutingTable routing_table;
        bool routes_dirty = false;
        std::uint32_t next_seq = 0;
        // Lower bound on every stored expiry; lets expire() skip the scan.
        double next_expiry = 0.0;

        void note_expiry(double t) noexcept { next_expiry = t < next_expiry ? t : next_expiry; }

        explicit NodeState(NodeId node = 0) : id(node) {}

        bool is_symmetric_neighbor(NodeId n) const
        {
            auto it = link_set.find(n);
            return it != link_set.end() && it->second.symmetric;
        }

        std::vector<NodeId> symmetric_neighbors() const;
    };

    // Builds the node's next HELLO (full link set, MPR flags) and consumes a sequence number.
    ControlMessage make_hello(NodeState& state, const OlsrConfig& config);
    // Builds a TC advertising the current MPR selectors; nullopt when there are none.
    std::optional<ControlMessage> make_tc(NodeState& state);

    void process_hello(NodeState& state, const ControlMessage& msg, double now, const OlsrConfig& config);

    // Greedy MPR heuristic over the state's symmetric neighbors and their two-hop sets.
    std::set<NodeId> select_mprs(const NodeState& state);

    void process_tc(NodeState& state, const ControlMessage& msg, double now, const OlsrConfig& config);

    bool is_duplicate(const NodeState& state, NodeId originator, std::uint32_t seq_no, double now);

    // Records the (originator, seq) entry; true when this node must re-broadcast.
    bool should_forward(NodeState& state, NodeId originator, std::uint32_t seq_no, NodeId sender, double now,
                        const OlsrConfig& config);

    RoutingTable compute_routes(const NodeState& state);

    // Drops every entry with expiry <= now; marks MPRs and routes dirty if
    // anything was removed. Returns whether the state changed.
    bool expire(NodeState& state, double now);

    // Recomputes the MPR set when the neighborhood changed since the last call.
    const std::set<NodeId>& current_mprs(NodeState& state);

    // Recomputes the routing table when dirty and returns it.
    const RoutingTable& current_routes(NodeState& state);
} // namespace eolsr::olsr
