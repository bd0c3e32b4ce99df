#pragma once

#include "eolsr/olsr.hpp"
#include "eolsr/rng.hpp"
#include "eolsr/scenario.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <variant>
#include <vector>

namespace eolsr::sim
{
    // Network interface electrical profile. Currents in mA and voltages in V, so
    // energies come out in millijoules.
    struct NicProfile
    {
        double i_send = 440.0;
        double v_send = 5.0;
        double i_recv = 260.0;
        double v_recv = 5.0;
        double bandwidth = 6e6;

        void validate() const;

        double send_power() const noexcept { return i_send * v_send; }
        double recv_power() const noexcept { return i_recv * v_recv; }
    };

    // Unex DCMA-86P2 802.11p card at 6 Mbps.
    inline NicProfile default_nic() { return {}; }

    double packet_airtime(double size_bits, double bandwidth_bps);
    double energy_send(const NicProfile& nic, double size_bits);
    double energy_recv(const NicProfile& nic, double size_bits);
    // Sender cost plus the cost at each of `receivers` in-range nodes.
    double broadcast_energy(const NicProfile& nic, double size_bits, int receivers);

    struct NodeEnergy
    {
        double e_sent = 0.0; // mJ
        double e_recv = 0.0;

        double total() const noexcept { return e_sent + e_recv; }
    };

    class EnergyLedger
    {
    public:
        explicit EnergyLedger(int node_count = 0) : per_node_(static_cast<std::size_t>(node_count)) {}

        void charge_send(NodeId node, double mj);
        void charge_recv(NodeId node, double mj);

        double e_sent() const noexcept { return e_sent_; }
        double e_recv() const noexcept { return e_recv_; }
        double e_total() const noexcept { return e_sent_ + e_recv_; }
        double e_total_per_vehicle() const noexcept
        {
            return per_node_.empty() ? 0.0 : e_total() / static_cast<double>(per_node_.size());
        }
        const std::vector<NodeEnergy>& per_node() const noexcept { return per_node_; }

    private:
        std::vector<NodeEnergy> per_node_;
        double e_sent_ = 0.0;
        double e_recv_ = 0.0;
    };

    struct SimMetrics
    {
        std::optional<double> pdr;  // percent; absent without data flows
        std::optional<double> e2ed; // ms, mean over delivered packets
        std::optional<double> nrl;  // percent: control transmissions per delivered packet
        std::optional<double> hops; // mean over delivered packets
        EnergyLedger energy;
        std::int64_t data_sent = 0;
        std::int64_t data_delivered = 0;
        std::int64_t control_transmissions = 0;
        // Energy spent on control-plane transmissions (subset of the ledger).
        double control_energy = 0.0;
    };

    struct TransmissionRecord
    {
        double time;
        NodeId sender;
        bool control;
        double size_bits;
        std::vector<NodeId> in_range; // every node charged for reception
    };

    struct SimOptions
    {
        // Allow scenarios with no data flows (pure control-plane runs).
        bool allow_no_flows = false;
        // Fixed per-hop queueing/processing delay added to each data hop.
        double processing_delay = 0.002;
        // Observer for every transmission (tests use it as a shadow accumulator).
        std::function<void(const TransmissionRecord&)> on_transmission;
    };

    // Unit-disk connectivity at time t; excludes the node itself.
    std::vector<NodeId> neighbors_in_range(const MobilityTrace& trace, NodeId node, double t, double range);

    // Discrete-event OLSR network simulation over a scenario.
    class Simulator
    {
    public:
        Simulator(const Scenario& scenario, const olsr::OlsrConfig& config, const NicProfile& nic, std::uint64_t seed,
                  SimOptions options = {});

        SimMetrics run();

        const olsr::NodeState& node_state(NodeId node) const { return nodes_.at(static_cast<std::size_t>(node)); }
        // Originated control messages per node (HELLO + TC, excluding forwards).
        const std::vector<std::int64_t>& originated_control() const noexcept { return originated_; }

    private:
        struct EmitHello
        {
            NodeId node;
            double nominal;
        };
        struct EmitTc
        {
            NodeId node;
            double nominal;
        };
        struct CbrSend
        {
            std::size_t flow;
            std::int64_t index;
        };
        struct ControlArrival
        {
            NodeId receiver;
            std::shared_ptr<const olsr::ControlMessage> msg;
        };
        struct DataArrival
        {
            NodeId receiver;
            NodeId destination;
            double origin_time;
            int hops;
            int size_bytes;
        };
        using Payload = std::variant<EmitHello, EmitTc, CbrSend, ControlArrival, DataArrival>;

        struct Event
        {
            double time;
            std::uint64_t order;
            Payload payload;
        };
        struct Later
        {
            bool operator()(const Event& a, const Event& b) const
            {
                return a.time != b.time ? a.time > b.time : a.order > b.order;
            }
        };

        void schedule(double time, Payload payload);
        void schedule_periodic(double nominal, double period, Payload payload);
        void handle(double now, EmitHello& e);
        void handle(double now, EmitTc& e);
        void handle(double now, CbrSend& e);
        void handle(double now, ControlArrival& e);
        void handle(double now, DataArrival& e);

        // Charges energy and returns the nodes that successfully receive.
        std::vector<NodeId> transmit(double now, NodeId sender, double size_bits, bool control);
        void broadcast_control(double now, const olsr::ControlMessage& msg);
        void forward_data(double now, NodeId at, DataArrival packet);
        olsr::NodeState& touch(NodeId node, double now);

        const Scenario& scenario_;
        olsr::OlsrConfig config_;
        NicProfile nic_;
        SimOptions options_;
        Rng rng_;
        std::vector<olsr::NodeState> nodes_;
        std::vector<std::int64_t> originated_;
        std::priority_queue<Event, std::vector<Event>, Later> queue_;
        std::uint64_t next_order_ = 0;
        SimMetrics metrics_;
        double delay_sum_ = 0.0;
        std::int64_t hop_sum_ = 0;
        bool ran_ = false;
    };

    SimMetrics run_simulation(const Scenario& scenario, const olsr::OlsrConfig& config, const NicProfile& nic,
                              std::uint64_t seed, const SimOptions& options = {});

    struct Gaps
    {
        double energy; // fraction, positive = savings
        double pdr;    // fraction, positive = PDR loss
    };

    struct Comparison
    {
        SimMetrics candidate;
        SimMetrics reference;
        Gaps gaps;
    };

    // Runs `config` and rfc_default() with the same seed.
    Comparison compare_against_reference(const Scenario& scenario, const olsr::OlsrConfig& config,
                                         const NicProfile& nic, std::uint64_t seed, const SimOptions& options = {});

    // Flat CSV row / JSON object serialization.
    struct MetricsRowId
    {
        std::string scenario_id;
        std::string config_id;
        std::uint64_t seed = 0;
    };

    std::string metrics_csv_header();
    std::string metrics_csv_row(const MetricsRowId& id, const SimMetrics& m);
    std::string metrics_json(const MetricsRowId& id, const SimMetrics& m);
} // namespace eolsr::sim
