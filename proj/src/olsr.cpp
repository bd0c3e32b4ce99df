#include "eolsr/olsr.hpp"

#include "eolsr/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <limits>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

namespace eolsr::olsr
{
    namespace
    {
        template <typename Map, typename Pred>
        bool erase_if_any(Map& m, Pred pred)
        {
            return std::erase_if(m, pred) > 0;
        }

        void check_range(std::string_view name, double v, double lo, double hi)
        {
            if (!std::isfinite(v) || v < lo || v > hi)
            {
                throw ValidationError(std::string(name) + " = " + std::to_string(v) + " outside [" + std::to_string(lo) +
                                      ", " + std::to_string(hi) + "]");
            }
        }
    } // namespace

    // ------------------------------------------------------ configuration

    void OlsrConfig::validate() const
    {
        const auto& g = ParamSpace::standard().genes;
        check_range("hello_interval", hello_interval, g[kHello].min, g[kHello].max);
        check_range("refresh_interval", refresh_interval, g[kRefresh].min, g[kRefresh].max);
        check_range("tc_interval", tc_interval, g[kTc].min, g[kTc].max);
        check_range("willingness", willingness, g[kWillingness].min, g[kWillingness].max);
        check_range("neighb_hold_time", neighb_hold_time, g[kNeighbHold].min, g[kNeighbHold].max);
        check_range("mid_hold_time", mid_hold_time, g[kMidHold].min, g[kMidHold].max);
        check_range("top_hold_time", top_hold_time, g[kTopHold].min, g[kTopHold].max);
        check_range("dup_hold_time", dup_hold_time, g[kDupHold].min, g[kDupHold].max);
    }

    OlsrConfig rfc_default()
    {
        OlsrConfig c;
        c.hello_interval = 2.0;
        c.refresh_interval = 2.0;
        c.tc_interval = 5.0;
        c.willingness = 3;
        c.neighb_hold_time = 3.0 * c.hello_interval;
        c.top_hold_time = 3.0 * c.tc_interval;
        c.mid_hold_time = 3.0 * c.tc_interval;
        c.dup_hold_time = 30.0;
        return c;
    }

    OlsrConfig reference_best()
    {
        OlsrConfig c;
        c.hello_interval = 14.890;
        c.refresh_interval = 7.416;
        c.tc_interval = 28.158;
        c.willingness = 5;
        c.neighb_hold_time = 20.825;
        c.mid_hold_time = 10.814;
        c.top_hold_time = 70.959;
        c.dup_hold_time = 90.000;
        return c;
    }

    const ParamSpace& ParamSpace::standard()
    {
        static const ParamSpace space{{{
            {2.0, 15.0, 2.0},        // hello
            {2.0, 15.0, 2.0},        // refresh
            {4.0, 35.0, 5.0},        // tc
            {0.0, 7.0, 3.0, true},   // willingness
            {5.5, 45.0, 6.0},        // neighb hold
            {10.5, 90.0, 15.0},      // mid hold
            {10.5, 90.0, 15.0},      // top hold
            {10.5, 90.0, 30.0},      // dup hold
        }}};
        return space;
    }

    double ParamSpace::repair(std::size_t gene, double value) const
    {
        const auto& b = genes[gene];
        if (b.integer)
        {
            value = std::round(value);
        }
        return std::clamp(value, b.min, b.max);
    }

    Genome ParamSpace::repair(Genome genome) const
    {
        for (std::size_t i = 0; i < kGeneCount; ++i)
        {
            genome[i] = repair(i, genome[i]);
        }
        return genome;
    }

    bool ParamSpace::contains(const Genome& genome) const
    {
        for (std::size_t i = 0; i < kGeneCount; ++i)
        {
            const auto& b = genes[i];
            const double v = genome[i];
            if (!std::isfinite(v) || v < b.min || v > b.max || (b.integer && v != std::round(v)))
            {
                return false;
            }
        }
        return true;
    }

    Genome ParamSpace::rfc_genome() const
    {
        Genome g{};
        for (std::size_t i = 0; i < kGeneCount; ++i)
        {
            g[i] = genes[i].rfc_default;
        }
        return g;
    }

    std::string_view gene_name(std::size_t gene)
    {
        static constexpr std::array<std::string_view, kGeneCount> names{
            "hello_interval", "refresh_interval", "tc_interval",   "willingness",
            "neighb_hold_time", "mid_hold_time",  "top_hold_time", "dup_hold_time"};
        return names.at(gene);
    }

    OlsrConfig decode_genome(std::span<const double> genes, const ParamSpace& space)
    {
        if (genes.size() != kGeneCount)
        {
            throw ValidationError("genome must have 8 genes, got " + std::to_string(genes.size()));
        }
        Genome g{};
        for (std::size_t i = 0; i < kGeneCount; ++i)
        {
            if (!std::isfinite(genes[i]))
            {
                throw ValidationError("gene " + std::string(gene_name(i)) + " is not finite");
            }
            g[i] = space.repair(i, genes[i]);
        }
        OlsrConfig c;
        c.hello_interval = g[kHello];
        c.refresh_interval = g[kRefresh];
        c.tc_interval = g[kTc];
        c.willingness = static_cast<int>(g[kWillingness]);
        c.neighb_hold_time = g[kNeighbHold];
        c.mid_hold_time = g[kMidHold];
        c.top_hold_time = g[kTopHold];
        c.dup_hold_time = g[kDupHold];
        return c;
    }

    Genome encode_genome(const OlsrConfig& c)
    {
        return {c.hello_interval,   c.refresh_interval, c.tc_interval,   static_cast<double>(c.willingness),
                c.neighb_hold_time, c.mid_hold_time,    c.top_hold_time, c.dup_hold_time};
    }

    std::string config_to_json(const OlsrConfig& c)
    {
        nlohmann::ordered_json j;
        j["hello_interval"] = c.hello_interval;
        j["refresh_interval"] = c.refresh_interval;
        j["tc_interval"] = c.tc_interval;
        j["willingness"] = c.willingness;
        j["neighb_hold_time"] = c.neighb_hold_time;
        j["top_hold_time"] = c.top_hold_time;
        j["mid_hold_time"] = c.mid_hold_time;
        j["dup_hold_time"] = c.dup_hold_time;
        return j.dump(2);
    }

    OlsrConfig config_from_json(std::string_view json_text)
    {
        OlsrConfig c;
        try
        {
            const auto j = nlohmann::json::parse(json_text);
            c.hello_interval = j.at("hello_interval").get<double>();
            c.refresh_interval = j.at("refresh_interval").get<double>();
            c.tc_interval = j.at("tc_interval").get<double>();
            c.willingness = j.at("willingness").get<int>();
            c.neighb_hold_time = j.at("neighb_hold_time").get<double>();
            c.top_hold_time = j.at("top_hold_time").get<double>();
            c.mid_hold_time = j.at("mid_hold_time").get<double>();
            c.dup_hold_time = j.at("dup_hold_time").get<double>();
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigError(std::string("invalid OLSR config: ") + e.what());
        }
        c.validate();
        return c;
    }

    OlsrConfig load_config_file(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw ConfigError("cannot open config file " + path.string());
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        return config_from_json(buf.str());
    }

    double hello_emission_interval(const OlsrConfig& config)
    {
        return std::min(config.hello_interval, config.refresh_interval);
    }

    // ------------------------------------------------------------ messages

    std::vector<NodeId> NodeState::symmetric_neighbors() const
    {
        std::vector<NodeId> out;
        for (const auto& [n, link] : link_set)
        {
            if (link.symmetric)
            {
                out.push_back(n);
            }
        }
        return out;
    }

    ControlMessage make_hello(NodeState& state, const OlsrConfig& config)
    {
        ControlMessage msg;
        msg.kind = MessageKind::Hello;
        msg.originator = state.id;
        msg.sender = state.id;
        msg.seq_no = state.next_seq++;
        msg.willingness = config.willingness;
        msg.hello_entries.reserve(state.link_set.size());
        for (const auto& [n, link] : state.link_set)
        {
            LinkCode code = LinkCode::Asym;
            if (link.symmetric)
            {
                code = current_mprs(state).contains(n) ? LinkCode::Mpr : LinkCode::Sym;
            }
            msg.hello_entries.push_back({n, code});
        }
        return msg;
    }

    std::optional<ControlMessage> make_tc(NodeState& state)
    {
        if (state.mpr_selector_set.empty())
        {
            return std::nullopt;
        }
        ControlMessage msg;
        msg.kind = MessageKind::Tc;
        msg.originator = state.id;
        msg.sender = state.id;
        msg.seq_no = state.next_seq++;
        for (const auto& [n, expiry] : state.mpr_selector_set)
        {
            msg.tc_selectors.push_back(n);
        }
        return msg;
    }

    // ------------------------------------------------------------- HELLO

    void process_hello(NodeState& state, const ControlMessage& msg, double now, const OlsrConfig& config)
    {
        if (msg.sender == state.id)
        {
            return;
        }
        const double expiry = now + config.neighb_hold_time;
        const NodeId sender = msg.sender;

        bool listed = false;
        bool selected_me = false;
        for (const auto& e : msg.hello_entries)
        {
            if (e.neighbor == state.id)
            {
                listed = true;
                selected_me = e.code == LinkCode::Mpr;
            }
        }

        auto [it, inserted] = state.link_set.try_emplace(sender);
        LinkTuple& link = it->second;
        const bool was_symmetric = !inserted && link.symmetric;
        const int old_will = link.willingness;
        link.expiry = expiry;
        state.note_expiry(expiry);
        link.symmetric = listed;
        link.willingness = msg.willingness;

        bool neighborhood_changed = inserted || was_symmetric != link.symmetric || old_will != link.willingness;

        if (link.symmetric)
        {
            std::map<NodeId, double> reach;
            for (const auto& e : msg.hello_entries)
            {
                if (e.neighbor != state.id && e.code != LinkCode::Asym)
                {
                    reach[e.neighbor] = expiry;
                }
            }
            auto& current = state.two_hop_set[sender];
            bool same_members = current.size() == reach.size() &&
                                std::equal(current.begin(), current.end(), reach.begin(),
                                           [](const auto& a, const auto& b) { return a.first == b.first; });
            neighborhood_changed = neighborhood_changed || !same_members;
            if (reach.empty())
            {
                state.two_hop_set.erase(sender);
            }
            else
            {
                current = std::move(reach);
            }

            if (selected_me)
            {
                state.mpr_selector_set[sender] = expiry;
            }
            else
            {
                state.mpr_selector_set.erase(sender);
            }
        }
        else
        {
            neighborhood_changed = state.two_hop_set.erase(sender) > 0 || neighborhood_changed;
            state.mpr_selector_set.erase(sender);
        }

        if (neighborhood_changed)
        {
            state.mprs_dirty = true;
        }
        if (was_symmetric != link.symmetric)
        {
            state.routes_dirty = true;
        }
    }

    // --------------------------------------------------------------- MPR

    std::set<NodeId> select_mprs(const NodeState& state)
    {
        // Symmetric neighbors in id order; indices below refer to this list.
        std::vector<NodeId> nbrs;
        std::vector<int> will;
        for (const auto& [n, link] : state.link_set)
        {
            if (link.symmetric)
            {
                nbrs.push_back(n);
                will.push_back(link.willingness);
            }
        }
        auto index_of = [&](NodeId n) {
            auto it = std::lower_bound(nbrs.begin(), nbrs.end(), n);
            return it != nbrs.end() && *it == n ? static_cast<int>(it - nbrs.begin()) : -1;
        };

        // Strict two-hop node -> eligible (willingness > 0) provider indices.
        std::vector<std::pair<NodeId, int>> edges;
        for (const auto& [n, reach] : state.two_hop_set)
        {
            const int i = index_of(n);
            if (i < 0 || will[i] == kWillNever)
            {
                continue; // nodes reachable only through WILL_NEVER neighbors cannot be covered
            }
            for (const auto& [x, expiry] : reach)
            {
                if (x != state.id && index_of(x) < 0)
                {
                    edges.emplace_back(x, i);
                }
            }
        }
        std::sort(edges.begin(), edges.end());
        std::vector<std::vector<int>> providers;
        for (std::size_t k = 0; k < edges.size(); ++k)
        {
            if (k == 0 || edges[k].first != edges[k - 1].first)
            {
                providers.emplace_back();
            }
            providers.back().push_back(edges[k].second);
        }

        std::vector<char> chosen(nbrs.size(), 0);
        for (std::size_t i = 0; i < nbrs.size(); ++i)
        {
            chosen[i] = will[i] == kWillAlways;
        }
        auto covered = [&](const std::vector<int>& p) {
            return std::any_of(p.begin(), p.end(), [&](int m) { return chosen[m] != 0; });
        };

        std::vector<char> open(providers.size(), 0);
        for (std::size_t x = 0; x < providers.size(); ++x)
        {
            open[x] = !covered(providers[x]);
        }
        for (std::size_t x = 0; x < providers.size(); ++x)
        {
            if (open[x] && providers[x].size() == 1)
            {
                chosen[providers[x].front()] = 1;
            }
        }
        for (std::size_t x = 0; x < providers.size(); ++x)
        {
            open[x] = open[x] && !covered(providers[x]);
        }

        std::vector<int> reach(nbrs.size());
        for (;;)
        {
            std::fill(reach.begin(), reach.end(), 0);
            bool any = false;
            for (std::size_t x = 0; x < providers.size(); ++x)
            {
                if (open[x])
                {
                    any = true;
                    for (int m : providers[x])
                    {
                        ++reach[m];
                    }
                }
            }
            if (!any)
            {
                break;
            }
            int best = -1;
            for (std::size_t m = 0; m < nbrs.size(); ++m)
            {
                // strict comparison keeps the lowest id on ties
                if (reach[m] > 0 && (best < 0 || std::tie(will[m], reach[m]) > std::tie(will[best], reach[best])))
                {
                    best = static_cast<int>(m);
                }
            }
            chosen[best] = 1;
            for (std::size_t x = 0; x < providers.size(); ++x)
            {
                if (open[x] && std::find(providers[x].begin(), providers[x].end(), best) != providers[x].end())
                {
                    open[x] = 0;
                }
            }
        }

        std::set<NodeId> mprs;
        for (std::size_t i = 0; i < nbrs.size(); ++i)
        {
            if (chosen[i])
            {
                mprs.insert(nbrs[i]);
            }
        }
        return mprs;
    }

    // ---------------------------------------------------------------- TC

    void process_tc(NodeState& state, const ControlMessage& msg, double now, const OlsrConfig& config)
    {
        if (msg.originator == state.id)
        {
            return;
        }
        for (const auto& [key, tuple] : state.topology_set)
        {
            if (key.second == msg.originator && tuple.seq_no > msg.seq_no)
            {
                return; // stale
            }
        }
        std::erase_if(state.topology_set,
                      [&](const auto& kv) { return kv.first.second == msg.originator && kv.second.seq_no < msg.seq_no; });
        for (NodeId dest : msg.tc_selectors)
        {
            state.topology_set[{dest, msg.originator}] = {msg.seq_no, now + config.top_hold_time};
        }
        state.note_expiry(now + config.top_hold_time);
        state.routes_dirty = true;
    }

    bool is_duplicate(const NodeState& state, NodeId originator, std::uint32_t seq_no, double now)
    {
        auto it = state.duplicate_set.find({originator, seq_no});
        return it != state.duplicate_set.end() && it->second > now;
    }

    bool should_forward(NodeState& state, NodeId originator, std::uint32_t seq_no, NodeId sender, double now,
                        const OlsrConfig& config)
    {
        if (is_duplicate(state, originator, seq_no, now))
        {
            return false;
        }
        state.duplicate_set[{originator, seq_no}] = now + config.dup_hold_time;
        state.note_expiry(now + config.dup_hold_time);
        auto it = state.mpr_selector_set.find(sender);
        return it != state.mpr_selector_set.end() && it->second > now;
    }

    // ------------------------------------------------------------ routing

    RoutingTable compute_routes(const NodeState& state)
    {
        RoutingTable table;
        for (const auto& [n, link] : state.link_set)
        {
            if (link.symmetric)
            {
                table.emplace(n, Route{n, 1});
            }
        }
        for (int hops = 1;; ++hops)
        {
            // dest -> (next_hop, last_hop), minimized lexicographically
            std::map<NodeId, std::pair<NodeId, NodeId>> next_level;
            for (const auto& [key, tuple] : state.topology_set)
            {
                const auto [dest, last] = key;
                if (dest == state.id || table.contains(dest))
                {
                    continue;
                }
                auto via = table.find(last);
                if (via == table.end() || via->second.hops != hops)
                {
                    continue;
                }
                const std::pair<NodeId, NodeId> candidate{via->second.next_hop, last};
                auto [it, inserted] = next_level.try_emplace(dest, candidate);
                if (!inserted && candidate < it->second)
                {
                    it->second = candidate;
                }
            }
            if (next_level.empty())
            {
                return table;
            }
            for (const auto& [dest, choice] : next_level)
            {
                table.emplace(dest, Route{choice.first, hops + 1});
            }
        }
    }

    bool expire(NodeState& state, double now)
    {
        if (now < state.next_expiry)
        {
            return false;
        }
        bool changed = false;
        changed |= erase_if_any(state.link_set, [&](const auto& kv) { return kv.second.expiry <= now; });
        std::erase_if(state.two_hop_set, [&](auto& kv) {
            if (!state.is_symmetric_neighbor(kv.first))
            {
                changed = true;
                return true;
            }
            changed |= erase_if_any(kv.second, [&](const auto& e) { return e.second <= now; });
            return kv.second.empty();
        });
        changed |= erase_if_any(state.mpr_selector_set, [&](const auto& kv) {
            return kv.second <= now || !state.is_symmetric_neighbor(kv.first);
        });
        changed |= erase_if_any(state.topology_set, [&](const auto& kv) { return kv.second.expiry <= now; });
        std::erase_if(state.duplicate_set, [&](const auto& kv) { return kv.second <= now; });

        double next = std::numeric_limits<double>::infinity();
        for (const auto& [n, link] : state.link_set)
        {
            next = std::min(next, link.expiry);
        }
        for (const auto& [n, reach] : state.two_hop_set)
        {
            for (const auto& [x, t] : reach)
            {
                next = std::min(next, t);
            }
        }
        for (const auto& [n, t] : state.mpr_selector_set)
        {
            next = std::min(next, t);
        }
        for (const auto& [key, tuple] : state.topology_set)
        {
            next = std::min(next, tuple.expiry);
        }
        for (const auto& [key, t] : state.duplicate_set)
        {
            next = std::min(next, t);
        }
        state.next_expiry = next;
        if (changed)
        {
            state.mprs_dirty = true;
            state.routes_dirty = true;
        }
        return changed;
    }

    const std::set<NodeId>& current_mprs(NodeState& state)
    {
        if (state.mprs_dirty)
        {
            state.mpr_set = select_mprs(state);
            state.mprs_dirty = false;
        }
        return state.mpr_set;
    }

    const RoutingTable& current_routes(NodeState& state)
    {
        if (state.routes_dirty)
        {
            state.routing_table = compute_routes(state);
            state.routes_dirty = false;
        }
        return state.routing_table;
    }
} // namespace eolsr::olsr
