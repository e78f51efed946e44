// Minimal library walkthrough: simulate an oscillator, train on sparse
// displacement samples, and print the reconstructed force against the truth.

#include <cstdio>

#include "forcegp/forcegp.hpp"

int main() {
    using namespace forcegp;

    const OscillatorParams osc(1.0, 0.05, 2.0 * M_PI);

    // unit-amplitude resonant forcing, 20 s at 200 Hz
    const double fs = 200.0;
    const Eigen::Index n = static_cast<Eigen::Index>(20.0 * fs) + 1;
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, (n - 1) / fs);
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = std::sin(osc.omega_n * t[i]);
    const ResponseRecord record = simulate_response(osc, ForcingSignal(t, f), 0.0, 0.0);

    // sparse displacement training points from the steady-state part
    SamplingSpec spec;
    spec.interval = 0.05;
    spec.types = {ResponseType::disp};
    spec.window = {{8.0, 18.0}};
    const MeasurementSet data = subsample(record, spec);

    TrainConfig cfg;
    cfg.seed = 1;
    cfg.noise_for(ResponseType::disp) = {NoiseTreatment::Mode::fixed, 0.0};
    const TrainedModel model = train(osc, data, cfg);
    std::printf("trained: sigma_s=%.4f ell=%.4f loglik=%.2f\n", model.theta.kernel.sigma_s,
                model.theta.kernel.ell, model.log_likelihood);

    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(41, 10.0, 12.0);
    const ForcePosterior post = predict_force(model, grid);
    std::printf("%8s %12s %12s %12s\n", "t", "F_true", "F_mean", "sigma_F");
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        std::printf("%8.3f %12.6f %12.6f %12.3e\n", grid[i], std::sin(osc.omega_n * grid[i]),
                    post.mean[i], post.stddev[i]);
    return 0;
}
