// Command-line front end: one subcommand per pipeline, each writing CSV tables,
// optional field checkpoints and a manifest under the run directory.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lowmach/config.hpp"
#include "lowmach/io.hpp"
#include "lowmach/limitlab.hpp"

namespace fs = std::filesystem;
using namespace lowmach;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::vector<double> eps_list;
    std::vector<double> eta_list;
    std::optional<std::uint64_t> seed;
    std::string model;
};

SweepConfig resolve(const Options& o) {
    SweepConfig c = o.config.empty() ? SweepConfig{} : load_sweep_config(o.config);
    if (!o.eps_list.empty()) c.eps_list = o.eps_list;
    if (!o.eta_list.empty()) c.eta_list = o.eta_list;
    if (o.seed) c.seed = *o.seed;
    if (!o.model.empty()) c.model = o.model;
    c.validate();
    return c;
}

fs::path run_dir(const Options& o, const std::string& cmd) {
    fs::path d = o.out.empty() ? fs::path("runs") / cmd : fs::path(o.out);
    fs::create_directories(d);
    return d;
}

void save_table(const fs::path& p, const CsvTable& t) {
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    write_csv(os, t);
}

template <class F>
void save_with(const fs::path& p, F&& write) {
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    write(os);
}

std::string tag(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

/// Advances to each sample time of the config with dt from choose_dt, landing on the samples exactly.
void march(const SweepConfig& cfg, const std::function<double(double)>& choose_dt, const std::function<void(double, double)>& step,
           const std::function<void(int, double)>& record) {
    record(0, 0.0);
    double t = 0.0;
    for (int m = 1; m < cfg.samples; ++m) {
        const double t_next = cfg.horizon * m / (cfg.samples - 1);
        while (t < t_next - 1e-12) {
            const double dt0 = std::min(choose_dt(t), t_next - t);
            const int left = int(std::ceil((t_next - t) / dt0 - 1e-9));
            const double dt = (t_next - t) / left;
            step(t, dt);
            t = left == 1 ? t_next : t + dt;
        }
        record(m, t);
    }
}

bool checkpoint_due(const SweepConfig& cfg, int m) { return cfg.checkpoint_every > 0 && m % cfg.checkpoint_every == 0; }

fs::path checkpoint_dir(const fs::path& dir, double eps, int m) {
    std::ostringstream os;
    os << "eps" << eps << "_s" << std::setw(4) << std::setfill('0') << m;
    return dir / "checkpoints" / os.str();
}

double acoustic_dt(const SweepCase& cs, const SweepConfig& cfg) {
    const double h = std::min(cs.grid.hx(), cs.grid.hy());
    return cfg.acoustic_cfl * cs.scaling.eps * h / std::sqrt(cs.coeffs.omega);
}

double boussinesq_dt(const BoussinesqState& bq, double dt) {
    const double cfl = boussinesq_cfl(bq, dt);
    return cfl > 0.4 ? dt * 0.4 / cfl : dt;
}

// ---------------------------------------------------------------- commands

int cmd_check_thermo(const Options& o) {
    const auto cfg = resolve(o);
    const auto m = cfg.gas();
    const auto rep = check_hypotheses(m, log_grid(1e-3, 1e3, 200));
    const auto tr = check_transport(TransportLaws::standard(), log_grid(1e-3, 1e3, 200));
    std::cout << rep.to_text() << tr.to_text();
    if (!o.out.empty()) {
        const auto dir = run_dir(o, "check-thermo");
        save_with(dir / "report.txt", [&](std::ostream& os) { os << rep.to_text() << tr.to_text(); });
        write_manifest(dir, "check-thermo", cfg, json{{"report", "report.txt"}});
    }
    return rep.all_passed() && tr.all_passed() ? 0 : 1;
}

int cmd_equilibrium(const Options& o) {
    const auto cfg = resolve(o);
    const auto dir = run_dir(o, "equilibrium");
    const auto m = cfg.gas();
    const auto g = cfg.grid();
    const auto pot = potential(MassDistribution{cfg.masses}, g);
    const auto c = linearize(m, 1.0, 1.0);
    const auto reps = stratification_sweep(m, c.rho_bar, c.theta_bar, pot, cfg.eps_list);
    CsvTable t{{"eps", "c", "c_grad", "stable", "relation_residual", "momentum_residual"}, {}};
    for (std::size_t k = 0; k < reps.size(); ++k) {
        const auto prof = solve_equilibrium(m, c.rho_bar, c.theta_bar, cfg.eps_list[k], pot);
        t.add_row({reps[k].eps, reps[k].c, reps[k].c_grad, reps[k].stable ? 1.0 : 0.0, prof.relation_residual, prof.momentum_residual});
        FieldBundle b;
        b.add("rho_eps", prof.rho_eps);
        b.add("F", prof.F);
        save_bundle(dir / ("eps" + tag(cfg.eps_list[k])), b);
        std::cout << reps[k].detail << '\n';
    }
    save_table(dir / "bounds.csv", t);
    write_manifest(dir, "equilibrium", cfg, json{{"bounds", "bounds.csv"}});
    std::cout << "constants " << (reps.front().stable ? "stable" : "unstable") << " across the eps list\n";
    return 0;
}

int cmd_acoustic(const Options& o) {
    const auto cfg = resolve(o);
    const auto dir = run_dir(o, "acoustic");
    CsvTable t{{"eps", "eta", "time", "sup_norm", "energy"}, {}};
    for (double eta : cfg.eta_list)
        for (double eps : cfg.eps_list) {
            const auto cs = make_sweep_case(cfg, eps, eta);
            const auto p = local_decay_profile(cs.acoustic, cfg.window(), cfg.horizon, cfg.samples);
            for (const auto& s : p.samples) t.add_row({eps, eta, s.t, s.sup, s.energy});
            std::cout << "eps=" << eps << " eta=" << eta << " integral=" << p.integral << " reflection_time=" << p.reflection_time
                      << (p.reflection_warning ? " (horizon reaches reflections)" : "") << '\n';
        }
    save_table(dir / "decay.csv", t);
    write_manifest(dir, "acoustic", cfg, json{{"decay", "decay.csv"}});
    return 0;
}

int cmd_transport(const Options& o) {
    const auto cfg = resolve(o);
    const auto dir = run_dir(o, "transport");
    CsvTable table{{"eps", "time", "sigma_min", "sigma_max", "R_window_l2", "T_window_l2", "clamped"}, {}};
    const double eta = cfg.eta_list.front();
    for (double eps : cfg.eps_list) {
        auto cs = make_sweep_case(cfg, eps, eta);
        auto& bq = cs.boussinesq;
        auto& tr = cs.transport;
        const double dt_ac = acoustic_dt(cs, cfg);
        march(
            cfg, [&](double) { return boussinesq_dt(bq, dt_ac); },
            [&](double t, double dt) {
                const auto v0 = velocity(bq);
                auto bq1 = boussinesq_step(bq, dt);
                VectorField U = velocity(bq1);
                U += v0;
                U *= 0.5;
                U += acoustic_propagate(cs.acoustic, t + 0.5 * dt).grad_Phi();
                tr = transport_step(tr, U, dt);
                bq = std::move(bq1);
            },
            [&](int m, double t) {
                const auto ac = acoustic_propagate(cs.acoustic, t);
                const auto rt = recover_RT(ac.q_field(), tr.sigma, cs.coeffs);
                const auto& v = tr.sigma.values;
                table.add_row({eps, t, *std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end()),
                           norm(rt.R, NormKind::L2, cfg.window()), norm(rt.T, NormKind::L2, cfg.window()), double(tr.clamped)});
                if (checkpoint_due(cfg, m)) {
                    FieldBundle b;
                    b.time = t;
                    b.add("sigma", tr.sigma);
                    b.add("R", rt.R);
                    b.add("T", rt.T);
                    save_bundle(checkpoint_dir(dir, eps, m), b);
                }
            });
    }
    save_table(dir / "transport.csv", table);
    write_manifest(dir, "transport", cfg, json{{"series", "transport.csv"}});
    return 0;
}

int cmd_boussinesq(const Options& o) {
    const auto cfg = resolve(o);
    const auto dir = run_dir(o, "boussinesq");
    auto cs = make_sweep_case(cfg, cfg.eps_list.front(), cfg.eta_list.front());
    auto& bq = cs.boussinesq;
    CsvTable t{{"time", "kinetic", "thermal", "exchange", "grad_v_sup", "blowup"}, {}};
    bool blown = false;
    march(
        cfg, [&](double) { return boussinesq_dt(bq, cfg.horizon); },
        [&](double, double dt) { bq = boussinesq_step(bq, dt); },
        [&](int m, double time) {
            bq.time = time;
            const auto e = boussinesq_energy(bq);
            const bool b = blowup_proxy(bq);
            blown = blown || b;
            t.add_row({time, e.kinetic, e.thermal, e.exchange, velocity_gradient_sup(bq), b ? 1.0 : 0.0});
            if (checkpoint_due(cfg, m)) {
                FieldBundle fb;
                fb.time = time;
                fb.add("v", velocity(bq));
                fb.add("theta", temperature(bq));
                fb.add("vorticity", vorticity(bq));
                save_bundle(checkpoint_dir(dir, 0.0, m), fb);
            }
        });
    save_table(dir / "boussinesq.csv", t);
    write_manifest(dir, "boussinesq", cfg, json{{"series", "boussinesq.csv"}});
    if (blown) std::cout << "warning: blow-up proxy triggered before the horizon\n";
    return 0;
}

int cmd_nsf(const Options& o) {
    const auto cfg = resolve(o);
    const auto dir = run_dir(o, "nsf");
    CsvTable t{{"eps", "time", "mass", "energy", "entropy", "min_production", "rho_min", "theta_min"}, {}};
    for (double eps : cfg.eps_list) {
        auto cs = make_sweep_case(cfg, eps, cfg.eta_list.front());
        auto& s = cs.fluid;
        const double dt_ac = acoustic_dt(cs, cfg);
        march(
            cfg, [&](double) { return std::min(dt_ac, nsf_stable_dt(s, cs.laws, cs.scaling, cfg.advective_cfl)); },
            [&](double, double dt) { s = nsf_step(s, cs.model, cs.laws, cs.scaling, cs.eq, dt, cs.nsf); },
            [&](int m, double time) {
                const auto prod = entropy_production(s, cs.laws, cs.scaling);
                t.add_row({eps, time, total_mass(s), total_energy(s), total_entropy(s, cs.model),
                           *std::min_element(prod.values.begin(), prod.values.end()),
                           *std::min_element(s.rho.values.begin(), s.rho.values.end()),
                           *std::min_element(s.theta.values.begin(), s.theta.values.end())});
                if (checkpoint_due(cfg, m)) {
                    FieldBundle b;
                    b.time = time;
                    b.add("rho", s.rho);
                    b.add("theta", s.theta);
                    b.add("u", s.u);
                    save_bundle(checkpoint_dir(dir, eps, m), b);
                }
            });
        std::cout << "eps=" << eps << " done\n";
    }
    save_table(dir / "nsf.csv", t);
    write_manifest(dir, "nsf", cfg, json{{"series", "nsf.csv"}});
    return 0;
}

void print_fits(std::ostream& os, const SweepReport& rep) {
    write_orders_csv(os, rep);
    for (const auto& f : rep.fits)
        os << "eta=" << f.eta << " energy_nonincreasing=" << f.energy_nonincreasing << " momentum_decreasing=" << f.momentum_decreasing
           << " temperature_decreasing=" << f.temperature_decreasing << '\n';
}

int cmd_sweep(const Options& o) {
    const auto cfg = resolve(o);
    const auto dir = run_dir(o, "sweep");
    SampleObserver observe;
    if (cfg.checkpoint_every > 0)
        observe = [&](const SweepRecord& r, const FluidState& s, const BoussinesqState& bq) {
            const int m = int(r.samples.size()) - 1;
            if (!checkpoint_due(cfg, m)) return;
            FieldBundle b;
            b.time = s.time;
            b.add("rho", s.rho);
            b.add("theta", s.theta);
            b.add("u", s.u);
            b.add("v", velocity(bq));
            b.add("theta_boussinesq", temperature(bq));
            save_bundle(checkpoint_dir(dir, r.eps, m) / ("eta" + tag(r.eta)), b);
        };
    const auto rep = convergence_sweep(cfg, &std::cerr, observe);
    save_table(dir / "series.csv", sweep_series_table(rep));
    save_table(dir / "summary.csv", sweep_summary_table(rep));
    save_with(dir / "orders.csv", [&](std::ostream& os) { write_orders_csv(os, rep); });
    write_manifest(dir, "sweep", cfg, json{{"series", "series.csv"}, {"summary", "summary.csv"}, {"orders", "orders.csv"}});
    for (const auto& r : rep.records)
        if (!r.ok) std::cout << "eps=" << r.eps << " eta=" << r.eta << " failed: " << r.message << '\n';
    print_fits(std::cout, rep);
    return 0;
}

std::vector<std::map<std::string, double>> read_table(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw ConfigError("cannot open " + p.string());
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("empty table " + p.string());
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    std::vector<std::map<std::string, double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::map<std::string, double> row;
        for (const auto& c : cols) {
            if (!std::getline(ss, cell, ',')) throw ConfigError("short row in " + p.string());
            try {
                row[c] = std::stod(cell);
            } catch (const std::exception&) {
                throw ConfigError("bad number '" + cell + "' in " + p.string());
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

int cmd_report(const std::string& dir) {
    const auto man = read_manifest(dir);
    const auto cfg = sweep_config_from_json(man.at("config"));
    std::map<std::pair<double, double>, SweepRecord> recs;
    for (const auto& row : read_table(fs::path(dir) / "summary.csv")) {
        auto& r = recs[{row.at("eta"), row.at("eps")}];
        r.eps = row.at("eps");
        r.eta = row.at("eta");
        r.n = int(row.at("n"));
        r.ok = row.at("ok") != 0.0;
        r.steps = std::size_t(row.at("steps"));
    }
    for (const auto& row : read_table(fs::path(dir) / "series.csv")) {
        auto it = recs.find({row.at("eta"), row.at("eps")});
        if (it == recs.end()) throw ConfigError("series row without a summary entry");
        it->second.samples.push_back({row.at("time"), row.at("relative_entropy"), row.at("rho_norm"), row.at("momentum_norm"),
                                      row.at("temperature_norm"), row.at("residual_volume"), row.at("min_production"), false});
    }
    SweepReport rep;
    rep.late_from = cfg.measure_from * cfg.horizon;
    rep.window = cfg.window();
    for (auto& [k, r] : recs) rep.records.push_back(std::move(r));
    rep.fits = fit_sweep(rep.records, cfg.eta_list, rep.late_from);
    std::cout << "run " << dir << "  config " << man.value("config_hash", std::string("?")) << "  window half " << cfg.window_half
              << "  late from t=" << rep.late_from << '\n';
    print_fits(std::cout, rep);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lowmach: low Mach number limit laboratory"};
    app.require_subcommand(1);
    Options o;
    std::string report_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "run directory");
        sub->add_option("--eps-list", o.eps_list, "Mach numbers")->delimiter(',');
        sub->add_option("--eta", o.eta_list, "regularization parameters")->delimiter(',');
        sub->add_option("--seed", o.seed, "noise seed");
        sub->add_option("--model", o.model, "gas model: default or ideal");
    };
    std::map<std::string, std::function<int()>> cmds{
        {"check-thermo", [&] { return cmd_check_thermo(o); }}, {"equilibrium", [&] { return cmd_equilibrium(o); }},
        {"acoustic", [&] { return cmd_acoustic(o); }},         {"transport", [&] { return cmd_transport(o); }},
        {"boussinesq", [&] { return cmd_boussinesq(o); }},     {"nsf", [&] { return cmd_nsf(o); }},
        {"sweep", [&] { return cmd_sweep(o); }},
    };
    const std::map<std::string, std::string> help{
        {"check-thermo", "validate the gas model and transport laws"},
        {"equilibrium", "stratified equilibria and their bound constants"},
        {"acoustic", "local decay of the acoustic wave"},
        {"transport", "entropy-wave transport and recovered R, T"},
        {"boussinesq", "Boussinesq energy history"},
        {"nsf", "compressible run diagnostics"},
        {"sweep", "singular-limit sweep over eps and eta"},
    };
    for (const auto& [name, h] : help) add_common(app.add_subcommand(name, h));
    auto* rep = app.add_subcommand("report", "refit orders from a sweep run directory");
    rep->add_option("run-dir", report_dir, "sweep run directory")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        if (rep->parsed()) return cmd_report(report_dir);
        for (auto* sub : app.get_subcommands()) return cmds.at(sub->get_name())();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
