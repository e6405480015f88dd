// Command-line surface: dataset simulation, model fitting and prediction,
// the four canned experiments, and metric reports over artifact files.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "pigp/boundary.hpp"
#include "pigp/errors.hpp"
#include "pigp/experiments.hpp"
#include "pigp/gp.hpp"
#include "pigp/io.hpp"
#include "pigp/kernel.hpp"
#include "pigp/mean.hpp"
#include "pigp/metrics.hpp"
#include "pigp/optimize.hpp"
#include "pigp/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pigp;

namespace {

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    json cfg = json::parse(in);
    if (!cfg.contains("schema_version")) {
        throw ParseError("config missing schema_version: " + path);
    }
    if (cfg["schema_version"].get<int>() != 1) {
        throw ParseError("unsupported schema_version in " + path);
    }
    return cfg;
}

std::string resolve_relative(const std::string& base_file, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(base_file).parent_path() / p).string();
}

Vec json_to_vec(const json& arr) {
    Vec v(arr.size());
    Eigen::Index i = 0;
    for (const auto& x : arr) v[i++] = x.get<double>();
    return v;
}

json vec_to_json(const Vec& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

// ---------------------------------------------------------------------------
// Kernel/mean (de)serialization. The JSON mirrors the combinator structure;
// a fitted kernel is written back into the same shape with updated numbers.

KernelPtr kernel_from_json(const json& spec, const std::string& config_path) {
    const std::string type = spec.at("type").get<std::string>();
    if (type == "se") {
        return std::make_shared<SquaredExponentialKernel>(
            spec.at("signal_variance").get<double>(),
            json_to_vec(spec.at("length_scales")));
    }
    if (type == "white") {
        return std::make_shared<WhiteNoiseKernel>(
            spec.at("noise_variance").get<double>(), spec.at("input_dim").get<int>());
    }
    if (type == "sdof") {
        return std::make_shared<SdofKernel>(SdofParams{
            spec.at("natural_frequency").get<double>(),
            spec.at("damping_ratio").get<double>(), spec.at("amplitude").get<double>()});
    }
    if (type == "mdof") {
        ModalSet modes;
        for (const auto& m : spec.at("modes")) {
            modes.modes.push_back(SdofParams{m.at("natural_frequency").get<double>(),
                                             m.at("damping_ratio").get<double>(),
                                             m.at("amplitude").get<double>()});
        }
        return std::make_shared<MdofKernel>(modes);
    }
    if (type == "sum") {
        std::vector<KernelPtr> terms;
        for (const auto& t : spec.at("terms")) {
            terms.push_back(kernel_from_json(t, config_path));
        }
        return combine_sum(std::move(terms));
    }
    if (type == "product") {
        std::vector<ProductKernel::Factor> factors;
        for (const auto& f : spec.at("factors")) {
            std::vector<int> slice;
            for (const auto& c : f.at("slice")) slice.push_back(c.get<int>());
            factors.push_back({kernel_from_json(f.at("kernel"), config_path), slice});
        }
        return combine_product(std::move(factors));
    }
    if (type == "constrained_se") {
        const std::string mask_path =
            resolve_relative(config_path, spec.at("mask").get<std::string>());
        if (!fs::exists(mask_path)) throw ParseError("mask file not found: " + mask_path);
        GridDomain domain = read_mask_grid(mask_path, spec.at("spacing").get<double>());
        auto basis = std::make_shared<const ReducedRankBasis>(
            build_basis(domain, spec.at("basis_size").get<int>()));
        return std::make_shared<ConstrainedSeKernel>(
            basis, spec.at("signal_variance").get<double>(),
            spec.at("length_scale").get<double>());
    }
    throw ParseError("unknown kernel type: " + type);
}

/// Same JSON shape as the input spec, with the fitted numbers substituted.
json kernel_to_json(const KernelPtr& kernel, const json& original) {
    json out = original;
    if (const auto* se = dynamic_cast<const SquaredExponentialKernel*>(kernel.get())) {
        out["signal_variance"] = se->signal_variance();
        out["length_scales"] = vec_to_json(se->length_scales());
        return out;
    }
    if (const auto* w = dynamic_cast<const WhiteNoiseKernel*>(kernel.get())) {
        out["noise_variance"] = w->noise_variance();
        return out;
    }
    if (const auto* s = dynamic_cast<const SdofKernel*>(kernel.get())) {
        out["natural_frequency"] = s->params().natural_frequency;
        out["damping_ratio"] = s->params().damping_ratio;
        out["amplitude"] = s->params().amplitude;
        return out;
    }
    if (const auto* m = dynamic_cast<const MdofKernel*>(kernel.get())) {
        json modes = json::array();
        for (const auto& mode : m->modes().modes) {
            modes.push_back({{"natural_frequency", mode.natural_frequency},
                             {"damping_ratio", mode.damping_ratio},
                             {"amplitude", mode.amplitude}});
        }
        out["modes"] = modes;
        return out;
    }
    if (const auto* sum = dynamic_cast<const SumKernel*>(kernel.get())) {
        for (std::size_t i = 0; i < sum->terms().size(); ++i) {
            out["terms"][i] = kernel_to_json(sum->terms()[i], original["terms"][i]);
        }
        return out;
    }
    if (const auto* prod = dynamic_cast<const ProductKernel*>(kernel.get())) {
        for (std::size_t i = 0; i < prod->factors().size(); ++i) {
            out["factors"][i]["kernel"] = kernel_to_json(
                prod->factors()[i].kernel, original["factors"][i]["kernel"]);
        }
        return out;
    }
    if (const auto* c = dynamic_cast<const ConstrainedSeKernel*>(kernel.get())) {
        out["signal_variance"] = c->signal_variance();
        out["length_scale"] = c->length_scale();
        return out;
    }
    throw NumericError("cannot serialize kernel: " + kernel->name());
}

MeanPtr mean_from_json(const json& spec, const TrainingSet* fit_data) {
    const std::string type = spec.value("type", "zero");
    if (type == "zero") return std::make_shared<ZeroMean>();
    if (type == "linear") {
        std::vector<int> slice;
        for (const auto& c : spec.at("covariate_slice")) slice.push_back(c.get<int>());
        return std::make_shared<LinearMean>(json_to_vec(spec.at("weights")),
                                            spec.at("intercept").get<double>(), slice);
    }
    if (type == "linear_fit") {
        if (fit_data == nullptr) {
            throw ParseError("mean type linear_fit requires training data");
        }
        std::vector<int> slice;
        for (const auto& c : spec.at("covariate_slice")) slice.push_back(c.get<int>());
        return fit_linear_mean(fit_data->X, fit_data->y, slice);
    }
    throw ParseError("unknown mean type: " + type);
}

json mean_to_json(const MeanPtr& mean) {
    if (dynamic_cast<const ZeroMean*>(mean.get()) != nullptr) {
        return {{"type", "zero"}};
    }
    const auto* lin = dynamic_cast<const LinearMean*>(mean.get());
    if (lin != nullptr) {
        return {{"type", "linear"},
                {"weights", vec_to_json(lin->weights())},
                {"intercept", lin->intercept()},
                {"covariate_slice", lin->covariate_slice()}};
    }
    throw NumericError("cannot serialize mean: " + mean->name());
}

void write_json(const std::string& path, const json& doc) {
    atomic_write(path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Subcommand bodies.

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
                 const std::string& out_dir) {
    const json cfg = load_config(config_path);
    const std::string generator = cfg.at("generator").get<std::string>();
    const std::uint64_t seed =
        seed_flag ? *seed_flag : cfg.at("seed").get<std::uint64_t>();
    fs::create_directories(out_dir);

    if (generator == "sdof") {
        SdofSystem system;
        system.mass = cfg.value("mass", 1.0);
        system.damping = cfg.value("damping", 0.1);
        system.stiffness = cfg.value("stiffness", 1.0);
        system.forcing_variance = cfg.value("forcing_variance", 1.0);
        const Trajectory traj = simulate_sdof(system, cfg.at("dt").get<double>(),
                                              cfg.at("n_steps").get<int>(), seed);
        TrainingSet out{traj.times, traj.values.col(0)};
        write_training_set(out_dir + "/trajectory.csv", out, {"time"});
        return 0;
    }
    if (generator == "beam") {
        BeamSpec beam;
        beam.length = cfg.value("length", 1.0);
        beam.n_modes = cfg.value("n_modes", 2);
        beam.damping_ratios = cfg.value("damping_ratios", std::vector<double>{0.02, 0.02});
        beam.fundamental_frequency = cfg.value("fundamental_frequency", 2.0 * M_PI);
        if (cfg.contains("modal_frequencies")) {
            beam.modal_frequencies = cfg["modal_frequencies"].get<std::vector<double>>();
        }
        beam.impulse_location = cfg.value("impulse_location", beam.length);
        beam.impulse_magnitude = cfg.value("impulse_magnitude", 1.0);
        const Vec x_points = json_to_vec(cfg.at("x_points"));
        const Trajectory traj = simulate_beam(beam, cfg.at("dt").get<double>(),
                                              cfg.at("n_steps").get<int>(), x_points);
        TrainingSet out;
        out.X.resize(traj.values.size(), 2);
        out.y.resize(traj.values.size());
        Eigen::Index r = 0;
        for (Eigen::Index s = 0; s < traj.values.rows(); ++s) {
            for (Eigen::Index j = 0; j < traj.values.cols(); ++j) {
                out.X(r, 0) = traj.times[s];
                out.X(r, 1) = x_points[j];
                out.y[r] = traj.values(s, j);
                ++r;
            }
        }
        write_training_set(out_dir + "/field.csv", out, {"time", "position"});
        return 0;
    }
    if (generator == "bridge") {
        BridgeConfig bc;
        bc.slope = cfg.value("slope", bc.slope);
        bc.intercept = cfg.value("intercept", bc.intercept);
        bc.residual_amplitude = cfg.value("residual_amplitude", bc.residual_amplitude);
        bc.noise_std = cfg.value("noise_std", bc.noise_std);
        bc.samples_per_day = cfg.value("samples_per_day", bc.samples_per_day);
        const BridgeSeries series =
            synth_bridge_series(seed, cfg.at("n_days").get<int>(), bc);
        write_training_set(out_dir + "/series.csv", series.data,
                           {"time_days", "temperature"});
        return 0;
    }
    throw ParseError("unknown generator: " + generator);
}

int cmd_fit(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
            const std::string& out_dir) {
    const json cfg = load_config(config_path);
    const TrainingSet data = read_training_set(
        resolve_relative(config_path, cfg.at("data").get<std::string>()));

    const json kernel_spec = cfg.at("kernel");
    KernelPtr family = kernel_from_json(kernel_spec, config_path);
    const MeanPtr mean = mean_from_json(cfg.value("mean", json{{"type", "zero"}}), &data);

    const json ospec = cfg.value("optimizer", json::object());
    OptimizationSpec spec;
    spec.n_starts = ospec.value("n_starts", 4);
    spec.max_iterations = ospec.value("max_iterations", 100);
    spec.tolerance = ospec.value("tolerance", 1e-8);
    spec.seed = seed_flag ? static_cast<unsigned>(*seed_flag)
                          : ospec.value("seed", 0u);
    if (ospec.contains("bounds")) {
        spec.bounds.lower = json_to_vec(ospec["bounds"].at("lower"));
        spec.bounds.upper = json_to_vec(ospec["bounds"].at("upper"));
    } else {
        spec.bounds = default_bounds(family, data, ospec.value("time_column", 0));
    }

    const OptimizationResult result = optimize(family, mean, data, spec);
    const FittedGp gp = fit(result.best_kernel, mean, data);

    fs::create_directories(out_dir);
    json model;
    model["schema_version"] = 1;
    model["kernel"] = kernel_to_json(result.best_kernel, kernel_spec);
    model["mean"] = mean_to_json(mean);
    model["lml"] = result.best_lml;
    model["jitter_used"] = gp.jitter_used();
    write_json(out_dir + "/model.json", model);

    Report report;
    report.set("schema_version", "1");
    report.set("lml", result.best_lml);
    report.set("jitter_used", gp.jitter_used());
    report.set("optimizer_starts", static_cast<long long>(result.per_start_trace.size()));
    report.write(out_dir + "/fit_report.txt");
    std::cout << report.to_string();
    return 0;
}

int cmd_predict(const std::string& config_path, const std::string& out_dir,
                bool include_noise_variance) {
    const json cfg = load_config(config_path);
    const std::string model_path =
        resolve_relative(config_path, cfg.at("model").get<std::string>());
    std::ifstream in(model_path);
    if (!in) throw ParseError("cannot open model file: " + model_path);
    const json model = json::parse(in);
    if (model.value("schema_version", 0) != 1) {
        throw ParseError("unsupported model schema in " + model_path);
    }

    KernelPtr kernel = kernel_from_json(model.at("kernel"), model_path);
    const MeanPtr mean = mean_from_json(model.value("mean", json{{"type", "zero"}}), nullptr);
    const TrainingSet train = read_training_set(
        resolve_relative(config_path, cfg.at("train_data").get<std::string>()));
    const TrainingSet query = read_training_set(
        resolve_relative(config_path, cfg.at("data").get<std::string>()));

    const FittedGp gp = fit(kernel, mean, train);
    const Prediction pred = gp.predict(query.X);
    const double band = include_noise_variance ? kernel->diagonal_noise() : 0.0;

    fs::create_directories(out_dir);
    write_prediction(out_dir + "/predictions.csv", query.X, pred, band);
    return 0;
}

int cmd_experiment(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
                   const std::string& out_dir, bool include_noise_variance) {
    const json cfg = load_config(config_path);
    ExperimentOptions opt;
    opt.seed = seed_flag ? *seed_flag : cfg.at("seed").get<std::uint64_t>();
    opt.out_dir = out_dir;
    opt.include_noise_variance = include_noise_variance;
    const std::string id = cfg.at("experiment").get<std::string>();

    Report report;
    if (id == "sdof-subnyquist") {
        SdofSubnyquistConfig c;
        c.natural_frequency_hz = cfg.value("natural_frequency_hz", c.natural_frequency_hz);
        c.damping_ratio = cfg.value("damping_ratio", c.damping_ratio);
        c.forcing_variance = cfg.value("forcing_variance", c.forcing_variance);
        c.dt = cfg.value("dt", c.dt);
        c.n_steps = cfg.value("n_steps", c.n_steps);
        c.keep_every = cfg.value("keep_every", c.keep_every);
        c.noise_std = cfg.value("noise_std", c.noise_std);
        c.n_starts = cfg.value("n_starts", c.n_starts);
        c.max_iterations = cfg.value("max_iterations", c.max_iterations);
        report = run_sdof_subnyquist(c, opt);
    } else if (id == "bridge-mean") {
        BridgeMeanConfig c;
        c.n_days = cfg.value("n_days", c.n_days);
        c.train_fraction = cfg.value("train_fraction", c.train_fraction);
        c.eval_fraction = cfg.value("eval_fraction", c.eval_fraction);
        c.n_starts = cfg.value("n_starts", c.n_starts);
        c.max_iterations = cfg.value("max_iterations", c.max_iterations);
        report = run_bridge_mean(c, opt);
    } else if (id == "beam-product") {
        BeamProductConfig c;
        c.fundamental_hz = cfg.value("fundamental_hz", c.fundamental_hz);
        c.damping_ratio = cfg.value("damping_ratio", c.damping_ratio);
        c.dt = cfg.value("dt", c.dt);
        c.n_steps = cfg.value("n_steps", c.n_steps);
        c.train_steps = cfg.value("train_steps", c.train_steps);
        c.noise_std_rel = cfg.value("noise_std_rel", c.noise_std_rel);
        c.n_starts = cfg.value("n_starts", c.n_starts);
        c.max_iterations = cfg.value("max_iterations", c.max_iterations);
        report = run_beam_product(c, opt);
    } else if (id == "plate-boundary") {
        PlateBoundaryConfig c;
        c.basis_size = cfg.value("basis_size", c.basis_size);
        c.n_gen_modes = cfg.value("n_gen_modes", c.n_gen_modes);
        c.gen_length_scale = cfg.value("gen_length_scale", c.gen_length_scale);
        c.noise_std_rel = cfg.value("noise_std_rel", c.noise_std_rel);
        c.n_starts = cfg.value("n_starts", c.n_starts);
        c.max_iterations = cfg.value("max_iterations", c.max_iterations);
        report = run_plate_boundary(c, opt);
    } else {
        throw ParseError("unknown experiment id: " + id);
    }
    std::cout << report.to_string();
    return 0;
}

int cmd_report(const std::string& config_path, const std::string& out_dir) {
    const json cfg = load_config(config_path);
    const TrainingSet truth = read_training_set(
        resolve_relative(config_path, cfg.at("truth").get<std::string>()));

    // Prediction CSVs carry mean and variance after the input columns.
    const std::string pred_path =
        resolve_relative(config_path, cfg.at("predictions").get<std::string>());
    std::ifstream in(pred_path);
    if (!in) throw ParseError("cannot open predictions file: " + pred_path);
    std::string header;
    std::getline(in, header);
    const int n_inputs = static_cast<int>(truth.X.cols());
    std::vector<double> means, vars;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> fields;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            const std::string tok =
                line.substr(pos, comma == std::string::npos ? std::string::npos
                                                            : comma - pos);
            try {
                fields.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw ParseError("predictions: bad number at line " +
                                 std::to_string(line_no));
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (static_cast<int>(fields.size()) < n_inputs + 2) {
            throw ParseError("predictions: too few columns at line " +
                             std::to_string(line_no));
        }
        means.push_back(fields[static_cast<std::size_t>(n_inputs)]);
        vars.push_back(fields[static_cast<std::size_t>(n_inputs) + 1]);
    }
    if (static_cast<Eigen::Index>(means.size()) != truth.y.size()) {
        throw ParseError("predictions/truth row count mismatch");
    }
    const Vec mean = Eigen::Map<const Vec>(means.data(),
                                           static_cast<Eigen::Index>(means.size()));
    const Vec var = Eigen::Map<const Vec>(vars.data(),
                                          static_cast<Eigen::Index>(vars.size()));

    Report report;
    report.set("schema_version", "1");
    report.set("nmse_definition", "sum((y - yhat)^2) / (N * var(y))");
    report.set("log_loss_convention",
               "mean Gaussian negative log predictive density; lower is better");
    report.set("nmse", metric_nmse(truth.y, mean));
    report.set("log_loss", metric_log_loss(truth.y, mean, var));
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        report.write(out_dir + "/metrics.txt");
    }
    std::cout << report.to_string();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian process regression with physics-derived priors"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_flag;
    bool include_noise_variance = false;

    auto add_common = [&](CLI::App* sub, bool need_out) {
        sub->add_option("--config", config_path, "Config file (JSON, schema_version 1)")
            ->required();
        auto* out = sub->add_option("--out", out_dir, "Output directory");
        if (need_out) out->required();
        sub->add_option("--seed", seed_flag, "Override the config seed");
        sub->add_flag("--include-noise-variance", include_noise_variance,
                      "Report observation-space bands (adds learned noise)");
    };

    auto* sim = app.add_subcommand("simulate", "Synthesize a dataset");
    add_common(sim, true);
    auto* fit_cmd = app.add_subcommand("fit", "Optimize hyperparameters on a dataset");
    add_common(fit_cmd, true);
    auto* pred = app.add_subcommand("predict", "Predict from a fitted model");
    add_common(pred, true);
    auto* exp = app.add_subcommand("experiment", "Run a canned comparative experiment");
    add_common(exp, false);
    auto* rep = app.add_subcommand("report", "Metrics from prediction/truth files");
    add_common(rep, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(config_path, seed_flag, out_dir);
        if (fit_cmd->parsed()) return cmd_fit(config_path, seed_flag, out_dir);
        if (pred->parsed()) return cmd_predict(config_path, out_dir, include_noise_variance);
        if (exp->parsed()) {
            return cmd_experiment(config_path, seed_flag, out_dir, include_noise_variance);
        }
        if (rep->parsed()) return cmd_report(config_path, out_dir);
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}
