#include "eolsr/sim.hpp"

#include "eolsr/analysis.hpp"
#include "eolsr/error.hpp"
#include "eolsr/text.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace eolsr::sim
{
    // -------------------------------------------------------------- energy

    void NicProfile::validate() const
    {
        if (!(i_send > 0.0 && v_send > 0.0 && i_recv > 0.0 && v_recv > 0.0 && bandwidth > 0.0))
        {
            throw ValidationError("NIC profile values must all be positive");
        }
    }

    double packet_airtime(double size_bits, double bandwidth_bps) { return size_bits / bandwidth_bps; }

    double energy_send(const NicProfile& nic, double size_bits)
    {
        return nic.send_power() * packet_airtime(size_bits, nic.bandwidth);
    }

    double energy_recv(const NicProfile& nic, double size_bits)
    {
        return nic.recv_power() * packet_airtime(size_bits, nic.bandwidth);
    }

    double broadcast_energy(const NicProfile& nic, double size_bits, int receivers)
    {
        return energy_send(nic, size_bits) + receivers * energy_recv(nic, size_bits);
    }

    void EnergyLedger::charge_send(NodeId node, double mj)
    {
        per_node_.at(static_cast<std::size_t>(node)).e_sent += mj;
        e_sent_ += mj;
    }

    void EnergyLedger::charge_recv(NodeId node, double mj)
    {
        per_node_.at(static_cast<std::size_t>(node)).e_recv += mj;
        e_recv_ += mj;
    }

    // --------------------------------------------------------------- radio

    std::vector<NodeId> neighbors_in_range(const MobilityTrace& trace, NodeId node, double t, double range)
    {
        const Vec2 p = trace.position_at(node, t);
        std::vector<NodeId> out;
        for (NodeId other = 0; other < trace.node_count(); ++other)
        {
            if (other == node)
            {
                continue;
            }
            const Vec2 q = trace.position_at(other, t);
            if (std::hypot(q.x - p.x, q.y - p.y) <= range)
            {
                out.push_back(other);
            }
        }
        return out;
    }

    // ----------------------------------------------------------- simulator

    Simulator::Simulator(const Scenario& scenario, const olsr::OlsrConfig& config, const NicProfile& nic,
                         std::uint64_t seed, SimOptions options)
        : scenario_(scenario), config_(config), nic_(nic), options_(std::move(options)), rng_(seed)
    {
        scenario_.validate();
        config_.validate();
        nic_.validate();
        if (scenario_.flows.empty() && !options_.allow_no_flows)
        {
            throw ConfigError("no data flows");
        }
        const int n = scenario_.node_count();
        nodes_.reserve(static_cast<std::size_t>(n));
        for (NodeId i = 0; i < n; ++i)
        {
            nodes_.emplace_back(i);
        }
        originated_.assign(static_cast<std::size_t>(n), 0);
        metrics_.energy = EnergyLedger(n);
    }

    void Simulator::schedule(double time, Payload payload)
    {
        if (time <= scenario_.sim_duration)
        {
            queue_.push(Event{time, next_order_++, std::move(payload)});
        }
    }

    // Emission k happens at nominal k*period plus jitter in [0, period/4); the
    // nominal grid stops once the jitter window would cross the end of the run.
    void Simulator::schedule_periodic(double nominal, double period, Payload payload)
    {
        if (nominal + period / 4.0 > scenario_.sim_duration)
        {
            return;
        }
        const double jitter = rng_.uniform(0.0, period / 4.0);
        schedule(nominal + jitter, std::move(payload));
    }

    SimMetrics Simulator::run()
    {
        if (ran_)
        {
            throw Error("Simulator::run called twice");
        }
        ran_ = true;

        const double hello_period = olsr::hello_emission_interval(config_);
        for (NodeId i = 0; i < scenario_.node_count(); ++i)
        {
            schedule_periodic(0.0, hello_period, EmitHello{i, 0.0});
            schedule_periodic(0.0, config_.tc_interval, EmitTc{i, 0.0});
        }
        for (std::size_t f = 0; f < scenario_.flows.size(); ++f)
        {
            const auto& flow = scenario_.flows[f];
            if (flow.duration > 0.0)
            {
                schedule(flow.start, CbrSend{f, 0});
            }
        }

        while (!queue_.empty())
        {
            Event ev = queue_.top();
            queue_.pop();
            std::visit([&](auto& payload) { handle(ev.time, payload); }, ev.payload);
        }

        SimMetrics m = std::move(metrics_);
        if (m.data_sent > 0)
        {
            m.pdr = 100.0 * static_cast<double>(m.data_delivered) / static_cast<double>(m.data_sent);
        }
        if (m.data_delivered > 0)
        {
            const auto delivered = static_cast<double>(m.data_delivered);
            m.e2ed = 1000.0 * delay_sum_ / delivered;
            m.hops = static_cast<double>(hop_sum_) / delivered;
            m.nrl = 100.0 * static_cast<double>(m.control_transmissions) / delivered;
        }
        return m;
    }

    olsr::NodeState& Simulator::touch(NodeId node, double now)
    {
        auto& state = nodes_[static_cast<std::size_t>(node)];
        olsr::expire(state, now);
        return state;
    }

    std::vector<NodeId> Simulator::transmit(double now, NodeId sender, double size_bits, bool control)
    {
        const MobilityTrace& trace = scenario_.trace;
        const Vec2 p = trace.position_at(sender, now);
        const double e_send = energy_send(nic_, size_bits);
        const double e_recv = energy_recv(nic_, size_bits);

        metrics_.energy.charge_send(sender, e_send);
        double spent = e_send;

        TransmissionRecord record{now, sender, control, size_bits, {}};
        std::vector<NodeId> received;
        for (NodeId other = 0; other < trace.node_count(); ++other)
        {
            if (other == sender)
            {
                continue;
            }
            const Vec2 q = trace.position_at(other, now);
            const double d = std::hypot(q.x - p.x, q.y - p.y);
            if (d > scenario_.radio_range)
            {
                continue;
            }
            metrics_.energy.charge_recv(other, e_recv);
            spent += e_recv;
            record.in_range.push_back(other);
            const bool lost = scenario_.loss_model.kind == LossModel::Kind::Bernoulli &&
                              rng_.bernoulli(scenario_.loss_model.loss_probability(d, scenario_.radio_range));
            if (!lost)
            {
                received.push_back(other);
            }
        }
        if (control)
        {
            ++metrics_.control_transmissions;
            metrics_.control_energy += spent;
        }
        if (options_.on_transmission)
        {
            options_.on_transmission(record);
        }
        return received;
    }

    void Simulator::broadcast_control(double now, const olsr::ControlMessage& msg)
    {
        const double bits = 8.0 * msg.size();
        const auto receivers = transmit(now, msg.sender, bits, true);
        const double arrival = now + packet_airtime(bits, scenario_.bandwidth);
        auto shared = std::make_shared<const olsr::ControlMessage>(msg);
        for (NodeId r : receivers)
        {
            schedule(arrival, ControlArrival{r, shared});
        }
    }

    void Simulator::handle(double now, EmitHello& e)
    {
        auto& state = touch(e.node, now);
        broadcast_control(now, olsr::make_hello(state, config_));
        ++originated_[static_cast<std::size_t>(e.node)];
        const double period = olsr::hello_emission_interval(config_);
        schedule_periodic(e.nominal + period, period, EmitHello{e.node, e.nominal + period});
    }

    void Simulator::handle(double now, EmitTc& e)
    {
        auto& state = touch(e.node, now);
        if (auto tc = olsr::make_tc(state))
        {
            // The originator never re-forwards its own message.
            state.duplicate_set[{tc->originator, tc->seq_no}] = now + config_.dup_hold_time;
            broadcast_control(now, *tc);
            ++originated_[static_cast<std::size_t>(e.node)];
        }
        const double period = config_.tc_interval;
        schedule_periodic(e.nominal + period, period, EmitTc{e.node, e.nominal + period});
    }

    void Simulator::handle(double now, ControlArrival& e)
    {
        auto& state = touch(e.receiver, now);
        const auto& msg = *e.msg;
        if (msg.kind == olsr::MessageKind::Hello)
        {
            olsr::process_hello(state, msg, now, config_);
            return;
        }
        if (msg.originator == state.id || !state.is_symmetric_neighbor(msg.sender) ||
            olsr::is_duplicate(state, msg.originator, msg.seq_no, now))
        {
            return;
        }
        olsr::process_tc(state, msg, now, config_);
        if (olsr::should_forward(state, msg.originator, msg.seq_no, msg.sender, now, config_))
        {
            olsr::ControlMessage copy = msg;
            copy.sender = state.id;
            broadcast_control(now, copy);
        }
    }

    void Simulator::handle(double now, CbrSend& e)
    {
        const auto& flow = scenario_.flows[e.flow];
        ++metrics_.data_sent;
        forward_data(now, flow.source, DataArrival{flow.source, flow.destination, now, 0, flow.packet_size});

        const double next = flow.start + static_cast<double>(e.index + 1) / flow.rate;
        if (next < flow.end())
        {
            schedule(next, CbrSend{e.flow, e.index + 1});
        }
    }

    void Simulator::handle(double now, DataArrival& e)
    {
        if (e.receiver == e.destination)
        {
            ++metrics_.data_delivered;
            delay_sum_ += now - e.origin_time;
            hop_sum_ += e.hops;
            return;
        }
        forward_data(now, e.receiver, e);
    }

    void Simulator::forward_data(double now, NodeId at, DataArrival packet)
    {
        if (packet.hops >= scenario_.node_count())
        {
            return; // routing loop during convergence
        }
        auto& state = touch(at, now);
        const auto& routes = olsr::current_routes(state);
        auto route = routes.find(packet.destination);
        if (route == routes.end())
        {
            return;
        }
        const NodeId next_hop = route->second.next_hop;
        const double bits = 8.0 * packet.size_bytes;
        const auto receivers = transmit(now, at, bits, false);
        if (std::find(receivers.begin(), receivers.end(), next_hop) == receivers.end())
        {
            return;
        }
        packet.receiver = next_hop;
        packet.hops += 1;
        schedule(now + packet_airtime(bits, scenario_.bandwidth) + options_.processing_delay, packet);
    }

    SimMetrics run_simulation(const Scenario& scenario, const olsr::OlsrConfig& config, const NicProfile& nic,
                              std::uint64_t seed, const SimOptions& options)
    {
        Simulator sim(scenario, config, nic, seed, options);
        return sim.run();
    }

    Comparison compare_against_reference(const Scenario& scenario, const olsr::OlsrConfig& config,
                                         const NicProfile& nic, std::uint64_t seed, const SimOptions& options)
    {
        Comparison c{run_simulation(scenario, config, nic, seed, options),
                     run_simulation(scenario, olsr::rfc_default(), nic, seed, options),
                     {}};
        c.gaps.energy = analysis::gap_energy(c.candidate.energy.e_total(), c.reference.energy.e_total());
        c.gaps.pdr = analysis::gap_pdr(c.candidate.pdr.value_or(0.0), c.reference.pdr.value_or(0.0));
        return c;
    }

    // ------------------------------------------------------- serialization

    namespace
    {
        std::string opt_field(const std::optional<double>& v) { return v ? text::format_double(*v) : std::string{}; }

        nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }
    } // namespace

    std::string metrics_csv_header()
    {
        return "scenario_id,config_id,seed,pdr,e2ed_ms,nrl,hops,e_sent_mj,e_recv_mj,e_total_mj,"
               "e_total_per_vehicle_mj,data_sent,data_delivered,control_tx";
    }

    std::string metrics_csv_row(const MetricsRowId& id, const SimMetrics& m)
    {
        std::ostringstream os;
        os << id.scenario_id << ',' << id.config_id << ',' << id.seed << ',' << opt_field(m.pdr) << ','
           << opt_field(m.e2ed) << ',' << opt_field(m.nrl) << ',' << opt_field(m.hops) << ','
           << text::format_double(m.energy.e_sent()) << ',' << text::format_double(m.energy.e_recv()) << ','
           << text::format_double(m.energy.e_total()) << ',' << text::format_double(m.energy.e_total_per_vehicle())
           << ',' << m.data_sent << ',' << m.data_delivered << ',' << m.control_transmissions;
        return os.str();
    }

    std::string metrics_json(const MetricsRowId& id, const SimMetrics& m)
    {
        nlohmann::ordered_json j;
        j["scenario_id"] = id.scenario_id;
        j["config_id"] = id.config_id;
        j["seed"] = id.seed;
        j["pdr"] = opt_json(m.pdr);
        j["e2ed_ms"] = opt_json(m.e2ed);
        j["nrl"] = opt_json(m.nrl);
        j["hops"] = opt_json(m.hops);
        j["e_sent_mj"] = m.energy.e_sent();
        j["e_recv_mj"] = m.energy.e_recv();
        j["e_total_mj"] = m.energy.e_total();
        j["e_total_per_vehicle_mj"] = m.energy.e_total_per_vehicle();
        j["data_sent"] = m.data_sent;
        j["data_delivered"] = m.data_delivered;
        j["control_tx"] = m.control_transmissions;
        return j.dump(2);
    }
} // namespace eolsr::sim
