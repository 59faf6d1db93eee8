#include "nesslab/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>

#include <json.hpp>

#include "nesslab/covariance.hpp"
#include "nesslab/errors.hpp"
#include "nesslab/io.hpp"
#include "nesslab/linearized.hpp"
#include "nesslab/simulate.hpp"
#include "nesslab/ssep.hpp"
#include "nesslab/steady_state.hpp"

namespace nesslab {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

json config_echo(const RunConfig& c) {
    json j;
    j["run"] = {{"out_dir", c.out_dir}, {"seed", c.seed}, {"grids", c.grids}, {"quiet", c.quiet}};
    json model = {{"name", c.model_name}, {"q_left", c.q_left}, {"q_right", c.q_right}};
    for (const auto& [k, v] : c.model_params) model["params"][k] = v;
    if (c.window_lo) model["window_lo"] = *c.window_lo;
    if (c.window_hi) model["window_hi"] = *c.window_hi;
    j["model"] = model;
    j["steady"] = {{"tol", c.steady_tol}, {"max_iter", c.steady_max_iter}};
    j["fluct"] = {{"dump_matrices", c.dump_matrices}};
    j["correlation"] = {{"separation_cutoff", c.separation_cutoff},
                        {"tau_lr_scale", c.tau_lr_scale},
                        {"tau_sr_scale", c.tau_sr_scale}};
    j["simulate"] = {{"grid", c.sim_grid},
                     {"dt", c.sim_dt},
                     {"n_steps", c.sim_steps},
                     {"burn_in", c.sim_burn_in},
                     {"n_trajectories", c.sim_trajectories},
                     {"scheme", c.sim_scheme},
                     {"lags", c.sim_lags}};
    j["ssep"] = {{"sites", c.ssep_sites},
                 {"sweeps", c.ssep_sweeps},
                 {"burn_in_sweeps", c.ssep_burn_in_sweeps},
                 {"chains", c.ssep_chains},
                 {"sample_stride", c.ssep_sample_stride}};
    return j;
}

class Harness {
public:
    Harness(const RunConfig& cfg, std::string command)
        : cfg_(cfg), command_(std::move(command)), out_(resolve_out_dir(cfg)) {}

    int run() {
        const auto t0 = std::chrono::steady_clock::now();
        fs::create_directories(out_);
        manifest_["artifact"] = {{"name", "nesslab"}, {"version", kArtifactVersion}};
        manifest_["command"] = command_;
        manifest_["config"] = config_echo(cfg_);
        manifest_["rng"] = {{"generator", kRngName},
                            {"seed", cfg_.seed},
                            {"stream_rule", "splitmix64(seed, index)"}};

        int code = kExitOk;
        try {
            dispatch();
        } catch (const ConfigError& e) {
            record_failure("config", e.what());
            code = kExitConfig;
        } catch (const SolverError& e) {
            record_failure(current_stage_, e.what());
            code = kExitSolver;
        } catch (const std::exception& e) {
            record_failure(current_stage_, e.what());
            code = kExitSolver;
        }
        if (code == kExitOk && !gate_failures_.empty()) code = kExitAcceptance;

        timings_["total_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        manifest_["files"] = files_sorted();
        manifest_["timings"] = timings_;
        write_file_atomic(out_ / "manifest.json", manifest_.dump(2) + "\n");
        return code;
    }

private:
    void dispatch() {
        if (command_ == "steady") {
            stage_steady();
        } else if (command_ == "fluct") {
            stage_steady();
            stage_fluct();
        } else if (command_ == "corr") {
            stage_steady();
            stage_corr(cfg_.grids, true);
        } else if (command_ == "phi") {
            stage_steady();
            stage_corr(cfg_.grids, false);
            stage_phi();
        } else if (command_ == "simulate") {
            stage_simulate();
        } else if (command_ == "ssep") {
            stage_corr({cfg_.grids.back()}, false);
            stage_ssep();
        } else if (command_ == "verify") {
            stage_steady();
            stage_fluct();
            stage_corr(cfg_.grids, true);
            stage_phi();
            stage_simulate();
            stage_ssep();
            stage_gates();
        } else {
            throw ConfigError("unknown command '" + command_ + "'");
        }
    }

    template <typename F>
    void timed(const std::string& stage, F&& body) {
        current_stage_ = stage;
        const auto t0 = std::chrono::steady_clock::now();
        body();
        timings_[stage + "_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    void note(const std::string& line) {
        if (!cfg_.quiet) std::cout << line << "\n";
    }

    void record_failure(const std::string& stage, const std::string& message) {
        manifest_["failure"] = {{"stage", stage}, {"message", message}};
    }

    void write(const std::string& name, const std::string& content) {
        const fs::path p = out_ / name;
        write_file_atomic(p, content);
        file_names_.push_back(name);
    }

    json files_sorted() {
        std::sort(file_names_.begin(), file_names_.end());
        json arr = json::array();
        for (const auto& name : file_names_) {
            const fs::path p = out_ / name;
            arr.push_back({{"name", name},
                           {"bytes", static_cast<long>(fs::file_size(p))},
                           {"fnv1a64", file_checksum(p)}});
        }
        return arr;
    }

    const ModelSpec& model() {
        if (!model_ready_) {
            model_spec_ = cfg_.build_model();
            model_ready_ = true;
        }
        return model_spec_;
    }

    std::vector<int> sorted_grids() const {
        std::vector<int> g = cfg_.grids;
        std::sort(g.begin(), g.end());
        return g;
    }

    const Profile& profile_for(int M) {
        auto it = profiles_.find(M);
        if (it != profiles_.end()) return it->second;
        SteadyOptions opts{cfg_.steady_tol, cfg_.steady_max_iter, SteadyInit::LinearInterpolation};
        Profile p = solve_steady(model(), build_grid(M), opts);
        return profiles_.emplace(M, std::move(p)).first->second;
    }

    void stage_steady() {
        timed("steady", [&] {
            const ValidationReport vr = validate_model(model(), 9);
            json vj = {{"pass", vr.pass},
                       {"worst_mobility_sym_eig", vr.worst_mobility_sym_eig},
                       {"worst_hessian_eig", vr.worst_hessian_eig}};
            for (const auto& f : vr.failures) vj["failures"].push_back(f);
            manifest_["stages"]["model_validation"] = vj;

            for (int M : sorted_grids()) {
                const Profile& p = profile_for(M);
                Eigen::MatrixXd by_cell(model().n, M);
                for (int i = 0; i < M; ++i) by_cell.col(i) = p.value_at(i);
                write("profile_M" + std::to_string(M) + ".csv",
                      profile_csv(p.grid.cell_points, by_cell));
                manifest_["stages"]["steady"]["M" + std::to_string(M)] = {
                    {"residual", p.residual},
                    {"cells", M},
                    {"h", p.grid.h},
                    {"operators", "staggered cells/fluxes, 3-point stencils, D = -G^T"}};
                note("[steady] M=" + std::to_string(M) +
                     " residual=" + format_double(p.residual));
            }
        });
    }

    void stage_fluct() {
        timed("fluct", [&] {
            for (int M : sorted_grids()) {
                const Profile& p = profile_for(M);
                const LinearizedSystem sys = assemble_system(model(), p);
                Eigen::EigenSolver<Eigen::MatrixXd> es(sys.L);
                Eigen::VectorXd re = es.eigenvalues().real();
                Eigen::VectorXd im = es.eigenvalues().imag();
                // Sort by real part for a stable spectrum file.
                std::vector<int> order(re.size());
                for (int i = 0; i < re.size(); ++i) order[i] = i;
                std::sort(order.begin(), order.end(), [&](int a, int b) {
                    return re(a) != re(b) ? re(a) < re(b) : im(a) < im(b);
                });
                Eigen::VectorXd re_s(re.size()), im_s(re.size());
                for (int i = 0; i < re.size(); ++i) {
                    re_s(i) = re(order[i]);
                    im_s(i) = im(order[i]);
                }
                write("spectrum_M" + std::to_string(M) + ".csv",
                      table_csv({"re", "im"}, {re_s, im_s}));

                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(sys.B);
                manifest_["stages"]["fluct"]["M" + std::to_string(M)] = {
                    {"spectral_abscissa", sys.spectral_abscissa},
                    {"dissipative", sys.spectral_abscissa < 0.0},
                    {"B_min_eig", eb.eigenvalues().minCoeff()},
                    {"B_max_eig", eb.eigenvalues().maxCoeff()},
                    {"mobility_bound", sys.mobility_bound}};
                if (cfg_.dump_matrices && M <= 64) {
                    write("L_M" + std::to_string(M) + ".csv",
                          matrix_csv(p.grid.cell_points, p.grid.cell_points, sys.L));
                    write("B_M" + std::to_string(M) + ".csv",
                          matrix_csv(p.grid.cell_points, p.grid.cell_points, sys.B));
                }
                note("[fluct] M=" + std::to_string(M) +
                     " abscissa=" + format_double(sys.spectral_abscissa));
            }
        });
    }

    void stage_corr(const std::vector<int>& grids, bool write_matrices) {
        timed("corr", [&] {
            std::vector<int> sorted = grids;
            std::sort(sorted.begin(), sorted.end());
            for (int M : sorted) {
                if (corr_by_grid_.count(M)) continue;
                const Profile& p = profile_for(M);
                GridCorrelation gc;
                gc.profile = p;
                const Eigen::MatrixXd L = assemble_generator(model(), p);
                const NoiseMatrices nm = assemble_noise(model(), p);
                gc.W = solve_stationary_covariance(L, nm.B, &gc.lyapunov_residual);
                LocalDecomposition loc = decompose_local(gc.W, model(), p);
                gc.W_local = std::move(loc.W_local);
                gc.R = std::move(loc.R);
                gc.phi = compute_phi(model(), p);
                gc.max_offdiag_R =
                    max_offdiagonal(gc.R, p.grid, model().n, cfg_.separation_cutoff);
                gc.w_local_scale = (gc.W_local.diagonal() * p.grid.h).maxCoeff();
                corr_by_grid_.emplace(M, std::move(gc));
            }

            std::vector<GridCorrelation> ordered;
            for (int M : sorted) ordered.push_back(corr_by_grid_.at(M));

            for (const auto& gc : ordered) {
                const int M = gc.profile.grid.cells;
                const auto& x = gc.profile.grid.cell_points;
                if (write_matrices) {
                    write("W_M" + std::to_string(M) + ".csv", matrix_csv(x, x, gc.W));
                    write("R_M" + std::to_string(M) + ".csv", matrix_csv(x, x, gc.R));
                }
                manifest_["stages"]["corr"]["M" + std::to_string(M)] = {
                    {"lyapunov_residual", gc.lyapunov_residual},
                    {"max_offdiag_R", gc.max_offdiag_R},
                    {"max_abs_R", gc.R.cwiseAbs().maxCoeff()},
                    {"h_scaled_R_norm", gc.profile.grid.h * gc.R.norm()},
                    {"w_local_scale", gc.w_local_scale}};
                note("[corr] M=" + std::to_string(M) +
                     " lyapunov_residual=" + format_double(gc.lyapunov_residual));
            }

            VerdictThresholds th;
            th.tau_lr_scale = cfg_.tau_lr_scale;
            th.tau_sr_scale = cfg_.tau_sr_scale;
            th.separation_cutoff = cfg_.separation_cutoff;
            verdict_ = long_range_verdict(ordered, th);
            manifest_["verdict"] = {{"range", verdict_name(verdict_->verdict)},
                                    {"tau_lr", verdict_->tau_lr},
                                    {"tau_sr", verdict_->tau_sr},
                                    {"grid_sizes", verdict_->grid_sizes},
                                    {"max_offdiag_by_grid", verdict_->max_offdiag_by_grid},
                                    {"explanation", verdict_->explanation}};
            write("verdict.json", manifest_["verdict"].dump(2) + "\n");
            note(std::string("[corr] verdict: ") + verdict_name(verdict_->verdict));
        });
    }

    void stage_phi() {
        timed("phi", [&] {
            const int n = model().n;
            for (const auto& [M, gc] : corr_by_grid_) {
                std::vector<std::string> headers = {"x"};
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k)
                        headers.push_back("phi_" + std::to_string(j + 1) + std::to_string(k + 1));
                std::vector<Eigen::VectorXd> cols(headers.size(), Eigen::VectorXd(M));
                for (int i = 0; i < M; ++i) {
                    cols[0](i) = gc.profile.grid.cell_points[i];
                    int c = 1;
                    for (int j = 0; j < n; ++j)
                        for (int k = 0; k < n; ++k) cols[c++](i) = gc.phi.phi[i](j, k);
                }
                write("phi_M" + std::to_string(M) + ".csv", table_csv(headers, cols));
                manifest_["stages"]["phi"]["M" + std::to_string(M)] = {
                    {"max_abs_phi", gc.phi.max_abs_phi},
                    {"phi_center", gc.phi.phi[M / 2](0, 0)}};
            }
            const auto& finest = corr_by_grid_.rbegin()->second;
            manifest_["phi_center"] = finest.phi.phi[finest.profile.grid.cells / 2](0, 0);
            note("[phi] center value " + format_double(manifest_["phi_center"].get<double>()));
        });
    }

    void stage_simulate() {
        timed("simulate", [&] {
            const Profile& p = profile_for(cfg_.sim_grid);
            sim_system_ = assemble_system(model(), p);
            const SimConfig sc = cfg_.sim_config();
            std::vector<long> lag_steps;
            for (double tau : cfg_.sim_lags) {
                lag_steps.push_back(static_cast<long>(std::llround(tau / sc.dt)));
            }
            sim_stats_ = estimate_covariance(*sim_system_, sc, lag_steps);
            const auto& x = p.grid.cell_points;
            write("sim_covariance.csv", matrix_csv(x, x, sim_stats_->covariance));
            write("sim_covariance_se.csv", matrix_csv(x, x, sim_stats_->std_error));
            for (std::size_t li = 0; li < sim_stats_->lag_times.size(); ++li) {
                char tag[32];
                std::snprintf(tag, sizeof(tag), "%.4f", sim_stats_->lag_times[li]);
                write("sim_lag_" + std::string(tag) + ".csv",
                      matrix_csv(x, x, sim_stats_->lag_covariances[li]));
            }

            double exact_residual = 0.0;
            const Eigen::MatrixXd W =
                solve_stationary_covariance(sim_system_->L, sim_system_->B, &exact_residual);
            sim_exact_W_ = W;
            long within = 0, total = 0;
            for (int i = 0; i < W.rows(); ++i) {
                for (int j = 0; j < W.cols(); ++j) {
                    const double se = std::max(sim_stats_->std_error(i, j), 1e-300);
                    if (std::abs(sim_stats_->covariance(i, j) - W(i, j)) <= 3.0 * se) ++within;
                    ++total;
                }
            }
            manifest_["stages"]["simulate"] = {
                {"grid", cfg_.sim_grid},
                {"scheme", cfg_.sim_scheme},
                {"total_samples", sim_stats_->total_samples},
                {"batches", sim_stats_->total_batches},
                {"low_confidence", sim_stats_->low_confidence},
                {"burn_in_steps", resolve_burn_in(sc, *sim_system_)},
                {"within_3se_fraction", static_cast<double>(within) / total},
                {"lyapunov_residual", exact_residual}};
            if (!sim_stats_->skipped_lag_times.empty()) {
                manifest_["stages"]["simulate"]["skipped_lags"] = sim_stats_->skipped_lag_times;
            }

            for (std::size_t li = 0; li < sim_stats_->lag_times.size(); ++li) {
                const double tau = sim_stats_->lag_times[li];
                const Eigen::MatrixXd ref = time_correlation(sim_system_->L, W, tau);
                long lw = 0, lt = 0;
                for (int i = 0; i < ref.rows(); ++i) {
                    for (int j = 0; j < ref.cols(); ++j) {
                        const double se = std::max(sim_stats_->lag_std_errors[li](i, j), 1e-300);
                        if (std::abs(sim_stats_->lag_covariances[li](i, j) - ref(i, j)) <=
                            3.0 * se) {
                            ++lw;
                        }
                        ++lt;
                    }
                }
                manifest_["stages"]["simulate"]["lags"].push_back(
                    {{"tau", tau}, {"within_3se_fraction", static_cast<double>(lw) / lt}});
            }
            note("[simulate] samples=" + std::to_string(sim_stats_->total_samples) +
                 " within3se=" +
                 format_double(
                     manifest_["stages"]["simulate"]["within_3se_fraction"].get<double>()));
        });
    }

    void stage_ssep() {
        timed("ssep", [&] {
            if (model().n != 1) {
                throw ConfigError("ssep stage requires a scalar model");
            }
            const LatticeConfig lc = cfg_.lattice_config();
            micro_ = run_ssep(lc);
            const int N = lc.sites;
            Eigen::VectorXd site(N), xs(N);
            for (int i = 0; i < N; ++i) {
                site(i) = i + 1;
                xs(i) = (i + 1.0) / (N + 1.0);
            }
            write("micro_profile.csv", table_csv({"site", "x", "rho", "se"},
                                                 {site, xs, micro_->profile, micro_->profile_se}));
            std::vector<double> xv(xs.data(), xs.data() + N);
            write("micro_scaled_covariance.csv", matrix_csv(xv, xv, micro_->scaled_covariance));
            write("micro_scaled_covariance_se.csv",
                  matrix_csv(xv, xv, micro_->scaled_covariance_se));
            Eigen::VectorXd bond(N + 1);
            for (int b = 0; b <= N; ++b) bond(b) = b;
            write("micro_bond_current.csv",
                  table_csv({"bond", "current", "se"},
                            {bond, micro_->bond_current, micro_->bond_current_se}));

            const GridCorrelation& macro = corr_by_grid_.rbegin()->second;
            comparison_ = compare_to_macro(*micro_, lc, macro);
            write("comparison_diag.csv",
                  table_csv({"site", "x", "micro_var", "macro_q1mq", "se"},
                            {site, xs, micro_->scaled_covariance.diagonal() / N,
                             comparison_->macro_profile_at_lattice.array()
                                 .cwiseProduct(1.0 - comparison_->macro_profile_at_lattice.array())
                                 .matrix(),
                             micro_->scaled_covariance_se.diagonal() / N}));

            manifest_["stages"]["ssep"] = {
                {"sites", N},
                {"events", micro_->events},
                {"total_time", micro_->total_time},
                {"batches", micro_->batches},
                {"max_offdiag_dev", comparison_->max_offdiag_dev},
                {"mean_offdiag_dev", comparison_->mean_offdiag_dev},
                {"max_abs_R", comparison_->max_abs_R},
                {"diag_within_3se", comparison_->diag_within_3se},
                {"diag_total", comparison_->diag_total}};
            note("[ssep] events=" + std::to_string(micro_->events) + " mean_offdiag_dev=" +
                 format_double(comparison_->mean_offdiag_dev));
        });
    }

    void add_gate(const std::string& name, bool pass, const std::string& detail) {
        manifest_["gates"].push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
        if (!pass) gate_failures_.push_back(name);
        std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    }

    void stage_gates() {
        timed("gates", [&] {
            // Dissipativity on every grid.
            {
                double worst = -std::numeric_limits<double>::infinity();
                for (const auto& [M, gc] : corr_by_grid_) {
                    const double a =
                        check_dissipativity(assemble_generator(model(), gc.profile)).abscissa;
                    worst = std::max(worst, a);
                }
                add_gate("dissipativity", worst < -1.0,
                         "max spectral abscissa " + format_double(worst));
            }
            // Lyapunov residuals.
            {
                double worst = 0.0;
                for (const auto& [M, gc] : corr_by_grid_) {
                    worst = std::max(worst, gc.lyapunov_residual);
                }
                add_gate("lyapunov_residual", worst <= 1e-10,
                         "max relative residual " + format_double(worst));
            }
            // Phi against the catalog closed form, when one exists.
            const auto& entry = catalog_entry(cfg_.model_name);
            if (entry.closed_form.phi && model().n == 1) {
                const auto& finest = corr_by_grid_.rbegin()->second;
                const int M = finest.profile.grid.cells;
                double worst = 0.0;
                for (int i = 0; i < M; ++i) {
                    const double x = finest.profile.grid.cell_points[i];
                    const double ref =
                        entry.closed_form.phi(x, cfg_.q_left[0], cfg_.q_right[0]);
                    worst = std::max(worst, std::abs(finest.phi.phi[i](0, 0) - ref));
                }
                add_gate("phi_closed_form", worst <= 5e-4,
                         "max deviation " + format_double(worst) + " at M=" + std::to_string(M));
            }
            // Proposition consistency between Phi and the verdict.
            if (verdict_) {
                const auto& finest = corr_by_grid_.rbegin()->second;
                const double phi_max = finest.phi.max_abs_phi;
                bool pass = true;
                std::string detail = "max|phi| = " + format_double(phi_max) + ", verdict " +
                                     verdict_name(verdict_->verdict);
                if (phi_max > 0.1) {
                    pass = verdict_->verdict == Verdict::LongRange;
                } else if (phi_max <= 1e-10 * std::max(finest.w_local_scale, 1.0)) {
                    pass = verdict_->verdict == Verdict::ShortRange;
                }
                add_gate("proposition_consistency", pass, detail);
            }
            // Monte Carlo against the exact covariance.
            if (sim_stats_) {
                const double frac =
                    manifest_["stages"]["simulate"]["within_3se_fraction"].get<double>();
                add_gate("mc_within_3se", frac >= 0.99,
                         "fraction " + format_double(frac));
                if (manifest_["stages"]["simulate"].contains("lags")) {
                    double worst = 1.0;
                    for (const auto& lj : manifest_["stages"]["simulate"]["lags"]) {
                        worst = std::min(worst, lj["within_3se_fraction"].get<double>());
                    }
                    add_gate("mc_lag_within_3se", worst >= 0.99,
                             "worst lag fraction " + format_double(worst));
                }
            }
            // Micro-macro agreement.
            if (comparison_) {
                const bool off_ok =
                    comparison_->mean_offdiag_dev <= 0.10 * comparison_->max_abs_R;
                add_gate("micro_offdiag",
                         off_ok,
                         "mean dev " + format_double(comparison_->mean_offdiag_dev) +
                             " vs 10% of max|R| = " +
                             format_double(0.10 * comparison_->max_abs_R));
                const double diag_frac = static_cast<double>(comparison_->diag_within_3se) /
                                         comparison_->diag_total;
                add_gate("micro_diag", diag_frac >= 0.99,
                         "fraction within 3 SE " + format_double(diag_frac));
            }
        });
    }

    const RunConfig& cfg_;
    std::string command_;
    fs::path out_;
    json manifest_;
    json timings_;
    std::string current_stage_ = "setup";
    std::vector<std::string> file_names_;
    bool model_ready_ = false;
    ModelSpec model_spec_;
    std::map<int, Profile> profiles_;
    std::map<int, GridCorrelation> corr_by_grid_;
    std::optional<VerdictReport> verdict_;
    std::optional<LinearizedSystem> sim_system_;
    std::optional<EnsembleStats> sim_stats_;
    std::optional<Eigen::MatrixXd> sim_exact_W_;
    std::optional<MicroStats> micro_;
    std::optional<MacroComparison> comparison_;
    std::vector<std::string> gate_failures_;
};

} // namespace

std::string resolve_out_dir(const RunConfig& cfg) {
    if (const char* root = std::getenv("NESSLAB_OUT_ROOT")) {
        return (fs::path(root) / cfg.out_dir).string();
    }
    return cfg.out_dir;
}

int run_command(const std::string& command, const RunConfig& cfg) {
    Harness h(cfg, command);
    return h.run();
}

} // namespace nesslab
