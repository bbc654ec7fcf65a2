#include <sys/resource.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "depthgram/engine.hpp"
#include "depthgram/io_formats.hpp"
#include "depthgram/oracle.hpp"
#include "depthgram/plot.hpp"
#include "depthgram/synth.hpp"

namespace fs = std::filesystem;
using namespace depthgram;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

std::size_t default_threads() {
    if (const char* env = std::getenv("HDFD_THREADS")) {
        try {
            const long value = std::stol(env);
            if (value > 0) {
                return static_cast<std::size_t>(value);
            }
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid HDFD_THREADS='" << env << "'\n";
    }
    return 1;
}

std::string hex(std::uint64_t value) { return fmt::format("{:016x}", value); }

double peak_rss_mib() {
    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    return static_cast<double>(usage.ru_maxrss) / 1024.0;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> values;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            const double c = std::stod(item, &used);
            if (used != item.size() || !(c >= 0.0 && c <= 1.0)) {
                throw std::invalid_argument(item);
            }
            values.push_back(c);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--c-grid", "'" + item + "' is not a rate in [0, 1]");
        }
    }
    if (values.empty()) {
        throw CLI::ValidationError("--c-grid", "empty contamination grid");
    }
    return values;
}

struct SimulateArgs {
    ModelConfig model;
    std::string out;
    std::string labels_out;
};

int run_simulate(const SimulateArgs& args) {
    const SyntheticDataset data(args.model);
    HdfdHeader header;
    header.n = static_cast<std::uint32_t>(args.model.n);
    header.p = args.model.p;
    header.N = static_cast<std::uint32_t>(args.model.N);
    header.grid.assign(data.time_grid().begin(), data.time_grid().end());
    HdfdWriter writer(args.out, header);
    std::vector<double> block(data.block_size());
    for (std::size_t j = 0; j < args.model.p; ++j) {
        data.read_dimension(j, block);
        writer.write_dimension(block);
    }
    writer.finish();
    if (!args.labels_out.empty()) {
        write_text_file(args.labels_out, write_labels(data.truth()));
    }
    fmt::print("wrote {}: n={} p={} N={} payload_fnv1a={}\n", args.out, header.n, header.p, header.N,
               hex(writer.payload_checksum()));
    return kExitOk;
}

struct AnalyzeArgs {
    std::string in;
    double F = 1.5;
    bool marginal = false;
    std::string out_report;
    std::string out_csv;
    std::string out_marginal_csv;
    std::size_t threads = 1;
};

int run_analyze(const AnalyzeArgs& args) {
    const HdfdDataset data = HdfdDataset::open(args.in);
    AnalysisConfig config;
    config.F = args.F;
    config.run_marginal = args.marginal;
    config.threads = args.threads;
    const AnalysisReport report = analyze(data, config);
    if (!args.out_report.empty()) {
        write_text_file(args.out_report, write_report(report));
    }
    if (!args.out_csv.empty()) {
        write_text_file(args.out_csv, write_depthgram_csv(report));
    }
    if (!args.out_marginal_csv.empty() && report.marginal) {
        write_text_file(args.out_marginal_csv, write_marginal_csv(*report.marginal));
    }
    std::string outliers;
    for (auto i : report.outliers) {
        outliers += fmt::format("{}{}", outliers.empty() ? "" : " ", i + 1);
    }
    fmt::print("n={} p={} N={} flipped_dimensions={}\n", report.n, report.p, report.N, report.flipped_dimensions);
    for (const auto& dg : report.depthgrams) {
        fmt::print("{}: threshold={} flagged={}\n", variant_name(dg.variant), format_double(dg.threshold),
                   dg.flagged().size());
    }
    fmt::print("outliers: [{}]\n", outliers);
    fmt::print("elapsed_seconds={:.3f}\n", report.elapsed_seconds);
    return kExitOk;
}

struct StudyArgs {
    StudyConfig config;
    std::string c_grid = "0,0.25,0.5,0.75,1";
    std::string out_dir;
    bool points = false;
};

int run_study_command(StudyArgs args) {
    args.config.c_grid = parse_grid(args.c_grid);
    args.config.keep_points = args.points;
    ModelConfig{args.config.model, args.config.n, args.config.p, args.config.N, 0.0, args.config.seed}.validate();
    const StudySummary summary = run_study(args.config);
    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    write_text_file(dir / "study.csv", write_study_csv(summary));
    write_text_file(dir / "study.json", write_study_json(summary));
    if (args.points) {
        write_text_file(dir / "points.csv", write_pooled_points_csv(summary));
    }
    std::cout << write_study_csv(summary);
    return kExitOk;
}

struct PlotArgs {
    std::string points_csv;
    std::string labels;
    std::string out_svg;
    bool overlay = false;
};

int run_plot(const PlotArgs& args) {
    const auto rows = read_depthgram_csv(read_text_file(args.points_csv));
    std::vector<OutlierType> classes;
    if (!args.labels.empty()) {
        const GroundTruth truth = read_labels(read_text_file(args.labels));
        for (std::size_t i = 0; i < truth.n; ++i) {
            classes.push_back(truth.effective(i));
        }
    }
    PlotSpec spec;
    spec.overlay_parabola = args.overlay;
    const std::string svg = render_svg(rows, classes, spec);
    write_text_file(args.out_svg, svg);
    fmt::print("wrote {}\n", args.out_svg);
    return kExitOk;
}

struct OracleArgs {
    std::size_t n = 12;
    std::size_t m = 15;
    std::size_t trials = 500;
    std::uint64_t seed = 1;
};

int run_oracle(const OracleArgs& args) {
    const auto result = oracle::run_oracle_check(args.n, args.m, args.trials, args.seed);
    fmt::print("trials={} mismatches={} max_abs_error={}\n", result.trials, result.mismatches,
               format_double(result.max_abs_error));
    return result.mismatches == 0 ? kExitOk : kExitInternal;
}

struct BenchArgs {
    ModelConfig model{1, 100, 1000, 100, 1.0, 1};
    std::size_t threads = 1;
    bool marginal = false;
};

int run_bench(const BenchArgs& args) {
    const auto started = std::chrono::steady_clock::now();
    const SyntheticDataset data(args.model);
    AnalysisConfig config;
    config.threads = args.threads;
    config.run_marginal = args.marginal;
    const AnalysisReport report = analyze(data, config);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const std::string text = write_report(report);
    fmt::print("{{\"n\": {}, \"p\": {}, \"N\": {}, \"threads\": {}, \"wall_seconds\": {:.3f}, "
               "\"analyze_seconds\": {:.3f}, \"peak_rss_mib\": {:.1f}, \"report_fnv1a\": \"{}\", \"outliers\": {}}}\n",
               report.n, report.p, report.N, args.threads, wall, report.elapsed_seconds, peak_rss_mib(),
               hex(fnv1a(text)), report.outliers.size());
    return kExitOk;
}

struct ImportArgs {
    std::string dir;
    std::string out;
    std::string delimiter = ",";
    bool header = false;
};

int run_import(const ImportArgs& args) {
    if (args.delimiter.size() != 1) {
        throw CLI::ValidationError("--delimiter", "must be a single character");
    }
    const auto header = import_csv(args.dir, args.out, CsvLayout{args.delimiter[0], args.header});
    fmt::print("wrote {}: n={} p={} N={}\n", args.out, header.n, header.p, header.N);
    return kExitOk;
}

void add_model_options(CLI::App* cmd, ModelConfig& model) {
    cmd->add_option("--model", model.model, "Simulation model")->check(CLI::Range(1, 4));
    cmd->add_option("--n", model.n, "Observations")->check(CLI::Range(std::size_t{20}, std::size_t{1} << 31));
    cmd->add_option("--p", model.p, "Dimensions")->check(CLI::PositiveNumber);
    cmd->add_option("--N", model.N, "Time points")->check(CLI::PositiveNumber);
    cmd->add_option("--c", model.c, "Contamination rate")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--seed", model.seed, "Random seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Depth-based outlier detection for multivariate functional data"};
    app.require_subcommand(1);
    const std::size_t threads = default_threads();

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset and its labels");
    add_model_options(simulate, sim.model);
    simulate->add_option("--out", sim.out, "Output HDFD file")->required();
    simulate->add_option("--labels-out", sim.labels_out, "Output labels JSON");

    AnalyzeArgs an;
    an.threads = threads;
    auto* analyze_cmd = app.add_subcommand("analyze", "Compute the three DepthGrams and flag outliers");
    analyze_cmd->add_option("--in", an.in, "Input HDFD file")->required();
    analyze_cmd->add_option("--F", an.F, "Fence factor")->check(CLI::PositiveNumber);
    analyze_cmd->add_flag("--marginal", an.marginal, "Also run the per-dimension screen");
    analyze_cmd->add_option("--out-report", an.out_report, "Report JSON");
    analyze_cmd->add_option("--out-csv", an.out_csv, "DepthGram points CSV");
    analyze_cmd->add_option("--out-marginal-csv", an.out_marginal_csv, "Marginal flags CSV");
    analyze_cmd->add_option("--threads", an.threads, "Worker threads")->check(CLI::PositiveNumber);

    StudyArgs st;
    st.config.threads = threads;
    auto* study = app.add_subcommand("study", "Run a simulation study");
    study->add_option("--model", st.config.model, "Simulation model")->check(CLI::Range(1, 4));
    study->add_option("--n", st.config.n, "Observations")->check(CLI::Range(std::size_t{20}, std::size_t{1} << 31));
    study->add_option("--p", st.config.p, "Dimensions")->check(CLI::PositiveNumber);
    study->add_option("--N", st.config.N, "Time points")->check(CLI::PositiveNumber);
    study->add_option("--c-grid", st.c_grid, "Comma-separated contamination rates");
    study->add_option("--reps", st.config.replicates, "Replicates per rate")->check(CLI::PositiveNumber);
    study->add_option("--seed", st.config.seed, "Random seed");
    study->add_option("--F", st.config.F, "Fence factor")->check(CLI::PositiveNumber);
    study->add_option("--threads", st.config.threads, "Worker threads")->check(CLI::PositiveNumber);
    study->add_flag("!--no-marginal", st.config.marginal, "Skip the per-dimension screen");
    study->add_flag("--points", st.points, "Also write pooled DepthGram points");
    study->add_option("--out-dir", st.out_dir, "Output directory")->required();

    PlotArgs pl;
    auto* plot = app.add_subcommand("plot", "Render DepthGram points as SVG");
    plot->add_option("--points-csv", pl.points_csv, "DepthGram points CSV")->required();
    plot->add_option("--labels", pl.labels, "Labels JSON for coloring");
    plot->add_option("--out-svg", pl.out_svg, "Output SVG")->required();
    plot->add_flag("--overlay-parabola", pl.overlay, "Draw the g_n parabola");

    OracleArgs oc;
    auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare fast depth kernels with brute force");
    oracle_cmd->add_option("--n", oc.n, "Largest sample size")->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
    oracle_cmd->add_option("--m", oc.m, "Largest curve length")->check(CLI::Range(std::size_t{1}, std::size_t{1000}));
    oracle_cmd->add_option("--trials", oc.trials, "Random samples")->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--seed", oc.seed, "Random seed");

    BenchArgs bn;
    bn.threads = threads;
    auto* bench = app.add_subcommand("bench", "Time a full analysis of an in-memory synthetic dataset");
    add_model_options(bench, bn.model);
    bench->add_option("--threads", bn.threads, "Worker threads")->check(CLI::PositiveNumber);
    bench->add_flag("--marginal", bn.marginal, "Include the per-dimension screen");

    ImportArgs im;
    auto* import_cmd = app.add_subcommand("import-csv", "Convert per-dimension CSV files to HDFD");
    import_cmd->add_option("--dir", im.dir, "Directory of CSV files")->required();
    import_cmd->add_option("--out", im.out, "Output HDFD file")->required();
    import_cmd->add_option("--delimiter", im.delimiter, "Field delimiter");
    import_cmd->add_flag("--header", im.header, "Skip the first row of every file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (simulate->parsed()) return run_simulate(sim);
        if (analyze_cmd->parsed()) return run_analyze(an);
        if (study->parsed()) return run_study_command(st);
        if (plot->parsed()) return run_plot(pl);
        if (oracle_cmd->parsed()) return run_oracle(oc);
        if (bench->parsed()) return run_bench(bn);
        if (import_cmd->parsed()) return run_import(im);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const InvariantError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
