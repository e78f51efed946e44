// Synthesizes a turbulence record and compares its Welch estimate against
// the target spectrum, written as CSV to stdout.

#include <cstdio>

#include "forcegp/forcegp.hpp"

int main() {
    using namespace forcegp;

    const double U = 30.0, I = 0.10, L_u = 200.0;
    const WindField wf = generate_wind(U, I, L_u, 100.0, 600.0, 10.0, 2024);
    std::fprintf(stderr, "sigma_u = %.4f m/s (target %.1f)\n", rms(wf.u), I * U);

    const Psd est = psd(wf.u, 10.0);
    std::printf("f,S_est,S_target\n");
    for (Eigen::Index k = 1; k < est.freq.size(); ++k)
        std::printf("%g,%g,%g\n", est.freq[k], est.power[k],
                    von_karman_u_psd(est.freq[k], U, I * U, L_u));
    return 0;
}
