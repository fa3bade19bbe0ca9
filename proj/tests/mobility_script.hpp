#pragma once

#include <algorithm>
#include <vector>

#include "hoturbo/mobility.hpp"

namespace testing {

// Drives step_measured from scripted per-cell RSRP (n_re = 1, so RSRP is the
// received power) plus optional external interference.
struct Script {
  hoturbo::LinkBudget link;
  hoturbo::MobilityTimers timers;
  hoturbo::HoConfig cfg;
  hoturbo::UeConnectionState state;
  std::vector<hoturbo::Event> events;
  std::vector<double> sinr;

  Script(std::size_t n, hoturbo::HoConfig c, std::size_t serving = 0, hoturbo::MobilityTimers t = {}) : timers(t), cfg(std::move(c)) {
    for (std::size_t b = 0; b < n; ++b) {
      link.cell_ids.push_back(static_cast<int>(b) + 1);
      link.tx_dbm.push_back(46.0);
      link.tx_mw.push_back(hoturbo::dbm_to_mw(46.0));
    }
    link.noise_mw = 1e-20;
    link.n_re = 1;
    state = hoturbo::UeConnectionState::attach(n, serving, timers);
  }

  void tick(const std::vector<double>& rsrp, double extra_mw = 0.0) {
    double total = extra_mw;
    for (double r : rsrp) total += hoturbo::dbm_to_mw(r);
    hoturbo::TickOutcome o = hoturbo::step_measured(state, rsrp, total, link, timers, cfg, 0.04);
    sinr.push_back(o.sinr_db);
    events.insert(events.end(), o.events.begin(), o.events.end());
  }

  std::size_t count(hoturbo::EventType type) const {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [&](const hoturbo::Event& e) { return e.type == type; }));
  }
  std::vector<std::size_t> ticks_of(hoturbo::EventType type) const {
    std::vector<std::size_t> out;
    for (const auto& e : events)
      if (e.type == type) out.push_back(e.tick);
    return out;
  }
};

}  // namespace testing
