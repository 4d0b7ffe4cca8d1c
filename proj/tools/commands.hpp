#pragma once

#include "config.hpp"
#include "report.hpp"

namespace pathhedge::cli {

void command_qv(const Config& config, const Overrides& overrides, Report& report);
void command_integrate(const Config& config, const Overrides& overrides, Report& report);
void command_solve(const Config& config, const Overrides& overrides, Report& report);
void command_price(const Config& config, const Overrides& overrides, Report& report);
void command_hedge(const Config& config, const Overrides& overrides, Report& report);
void command_robust(const Config& config, const Overrides& overrides, Report& report);
void command_noarb(const Config& config, const Overrides& overrides, Report& report);
void command_ftvp(const Config& config, const Overrides& overrides, Report& report);

}  // namespace pathhedge::cli
