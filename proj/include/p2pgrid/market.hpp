#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "p2pgrid/netmodel.hpp"

namespace p2pgrid {

enum class OrderSide { ask, bid };
enum class MatchRound { nodal, zonal, network };
enum class VetStatus { pending, approved, blocked };

struct Order {
    int agent = 0;
    OrderSide side = OrderSide::ask;
    int node = 0;
    int zone = 0;
    double price_usd_mwh = 0.0;
    double quantity_kw = 0.0;
    int interval = 0;
};

struct Match {
    int seller = 0;
    int buyer = 0;
    int seller_node = 0;
    int buyer_node = 0;
    double quantity_kw = 0.0;
    double price_usd_mwh = 0.0; // midpoint of the matched ask and bid
    MatchRound round = MatchRound::nodal;
    VetStatus vetting = VetStatus::pending;
    std::string block_reason;
};

// One grid-side fallback cash flow: unmatched sellers feed in at FIT,
// unmatched buyers purchase at their nodal price.
struct GridSettlement {
    int agent = 0;
    int node = 0;
    OrderSide side = OrderSide::ask;
    double quantity_kw = 0.0;
    double price_usd_mwh = 0.0;
    double cash_usd = 0.0; // positive: credited to the agent
};

struct AuctionOutcome {
    int interval = 0;
    std::vector<Order> orders;
    std::vector<Match> matches; // ledger order: nodal, zonal, network
    std::map<int, double> residual_kw; // per agent, after matching and vetting
    std::map<std::string, double> round_gammas; // "nodal:18", "zonal:2", "network"
    std::vector<GridSettlement> settlements;
    std::map<int, double> seller_welfare; // SW_n in kW*$/MWh units
    std::map<int, double> buyer_welfare;  // BW_m
    double total_welfare = 0.0;
    double matched_kw = 0.0;
    double atp_usd_mwh = 0.0; // quantity-weighted; NaN when no approved match
    bool settled = false;
};

// Ascending asks / descending bids, price ties broken by agent id.
void sort_orders(std::vector<Order>& asks, std::vector<Order>& bids);

// Average price over the submitted pool (one term per order).
double average_price(const std::vector<Order>& asks, const std::vector<Order>& bids);

// Strict winner rule: asks below gamma, bids above gamma.
struct QualifiedPool {
    std::vector<Order> asks;
    std::vector<Order> bids;
};
QualifiedPool qualify(const std::vector<Order>& asks, const std::vector<Order>& bids,
                      double gamma);

// Greedy best-ask/best-bid pairing with partial fills while ask < bid.
// Consumes quantities from the passed books; emits matches priced midway.
std::vector<Match> match_round(std::vector<Order>& asks, std::vector<Order>& bids,
                               MatchRound round);

// Hierarchical nodal -> zonal -> network auction; gamma is recomputed per
// round over that round's residual pool. Bids must respect the nodal price
// caps in dlmp_signal.
AuctionOutcome run_mrda(const std::vector<Order>& orders, const Network& net,
                        const std::vector<double>& dlmp_signal_usd_mwh, int interval);

// Grid fallbacks: residual asks sell at FIT, residual bids buy at the nodal
// price. fit_quantity_cap_kw optionally limits the FIT-eligible quantity per
// selling agent (energy actually delivered during islanded operation).
void settle(AuctionOutcome& outcome, double fit_usd_mwh,
            const std::vector<double>& dlmp_usd_mwh, const Network& net, double dt_hours,
            const std::map<int, double>& fit_quantity_cap_kw = {});

// Per-agent welfare from approved matches plus the total.
void payoffs(AuctionOutcome& outcome);

// ---- default bidding strategy ------------------------------------------

struct AgentSituation {
    int agent = 0;
    int node = 0;
    int zone = 0;
    double surplus_kw = 0.0;   // offered quantity when positive
    double demand_kw = 0.0;    // bid quantity when positive
    double ref_price_usd_mwh = 0.0; // min(DLMP signal, strategy price cap)
};

struct BidContext {
    int interval = 0;
    bool islanded = false;
    double fit_usd_mwh = 20.0;
    BiddingParams params;
    std::uint64_t seed = 1; // interval-level stream
};

// Sellers draw asks uniformly in [floor, ref]; buyers draw bids in the same
// band; islanded intervals shift the floor up by the emergency uplift.
std::vector<Order> default_strategy_orders(const BidContext& ctx,
                                           const std::vector<AgentSituation>& agents);

// Deterministic interval-level substream of the scenario seed.
std::uint64_t interval_seed(std::uint64_t scenario_seed, int interval);

} // namespace p2pgrid
