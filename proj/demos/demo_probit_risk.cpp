// Closed-form vs Monte-Carlo risk for the probit family: y(x) = Phi(x) with
// standard normal features, labels on the positives above a threshold a.
// Shows how the value of observing the label indicator shrinks as labeling
// becomes rare (a grows).

#include <cstdio>

#include "purisk/purisk.hpp"

int main() {
    std::printf("%6s  %10s  %10s  %10s  |  %10s  %10s\n", "a", "l_star_pu", "excess", "p_s1",
                "mc_pu", "mc_excess");
    for (double a : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        const purisk::ProbitReport exact = purisk::probit_closed_form(a);
        const purisk::Scenario scenario = purisk::make_probit_scenario(a);
        const purisk::RiskReport mc = purisk::mc_bayes_risk(scenario, 200000, /*seed=*/7);
        std::printf("%6.2f  %10.6f  %10.6f  %10.6f  |  %10.6f  %10.6f\n", a, exact.l_star_pu,
                    exact.excess, exact.p_s1, mc.l_star_pu.value, mc.excess.value);
    }
    return 0;
}
