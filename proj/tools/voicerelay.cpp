// voicerelay: serve, simulate, repair-eval, augment, report.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "voicerelay/config.hpp"
#include "voicerelay/net/http_suggester.hpp"
#include "voicerelay/net/server.hpp"
#include "voicerelay/simulation.hpp"

namespace fs = std::filesystem;
using namespace voicerelay;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Resources {
    LetterRules rules = LetterRules::builtin();
    std::optional<Lexicon> lexicon;
    std::optional<PhonemeInventory> inventory;
    std::optional<CorpusIndex> corpus;
    std::unique_ptr<RetrievalRepairModel> repair;
    std::unique_ptr<Suggester> suggester;

    const PhonemeInventory& inv() const { return inventory ? *inventory : PhonemeInventory::builtin(); }
};

void load_lexicon(const RunConfig& cfg, Resources& r) {
    require_files({{"lexicon", cfg.lexicon}, {"letter_rules", cfg.letter_rules}, {"features", cfg.features}});
    if (!cfg.letter_rules.empty()) r.rules = LetterRules::load(cfg.letter_rules);
    if (!cfg.features.empty()) r.inventory = PhonemeInventory::load(cfg.features);
    r.lexicon = Lexicon::load(cfg.lexicon, r.rules);
}

void load_corpus(const RunConfig& cfg, Resources& r) {
    require_files({{"corpus", cfg.corpus}});
    r.corpus = load_corpus_index(cfg.corpus, *r.lexicon);
    r.repair = std::make_unique<RetrievalRepairModel>(*r.corpus, *r.lexicon);
}

void load_suggester(const RunConfig& cfg, Resources& r) {
    if (cfg.suggester == "none") return;
    if (cfg.suggester == "corpus") {
        require_files({{"dialogue_pairs", cfg.dialogue_pairs}});
        r.suggester = std::make_unique<CorpusReplySuggester>(load_dialogue_pairs(cfg.dialogue_pairs), *r.lexicon);
        return;
    }
    if (cfg.suggester.rfind("http://", 0) == 0) {
        r.suggester = std::make_unique<net::HttpSuggester>(cfg.suggester);
        return;
    }
    throw ConfigError("suggester must be corpus, none or an http:// url");
}

RelayOptions relay_options(const RunConfig& cfg) {
    RelayOptions o;
    o.deadlines = cfg.deadlines;
    o.token = cfg.token;
    o.skill_name = cfg.skill_name;
    o.wake_word = cfg.wake_word;
    o.seed = cfg.seed;
    return o;
}

fs::path ensure_out(const RunConfig& cfg) {
    fs::path out(cfg.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + out.string() + ": " + ec.message());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_metrics(const fs::path& dir, const std::vector<LatencyRecord>& records, const DeadlineConfig& d) {
    {
        std::ofstream csv(dir / "latency.csv", std::ios::binary);
        write_csv(csv, records);
        if (!csv) throw std::runtime_error("write failed: " + (dir / "latency.csv").string());
    }
    {
        std::ofstream hist(dir / "histogram.csv", std::ios::binary);
        write_histogram(hist, histogram(records, to_seconds(d.worker_budget) + 5.0));
        if (!hist) throw std::runtime_error("write failed: " + (dir / "histogram.csv").string());
    }
    write_text(dir / "summary.txt", render_summary(summarize(records)));
}

int cmd_simulate(const RunConfig& cfg) {
    if (cfg.script.empty()) throw ConfigError("simulate needs --script");
    require_files({{"script", cfg.script}});
    const auto model = parse_worker_model(cfg.worker_model);
    if (!model) throw ConfigError("worker model must be button, typist or absent");
    Resources r;
    load_lexicon(cfg, r);
    load_corpus(cfg, r);
    load_suggester(cfg, r);

    SimulationSetup setup;
    setup.relay = relay_options(cfg);
    setup.script = load_script(cfg.script);
    setup.cutoff = cfg.cutoff;
    setup.asr_noise = cfg.asr;
    setup.worker.model = *model;
    setup.seed = cfg.seed;
    const auto result = run_simulation(setup, *r.lexicon, r.repair.get(), r.suggester.get());

    const auto dir = ensure_out(cfg);
    {
        std::ofstream ev(dir / "events.jsonl", std::ios::binary);
        for (const auto& line : result.event_log) ev << line << '\n';
        if (!ev) throw std::runtime_error("write failed: " + (dir / "events.jsonl").string());
    }
    write_metrics(dir, result.records, cfg.deadlines);
    std::cout << "responses " << result.responses << "\nabandoned " << result.abandoned << "\ncutoffs "
              << result.cutoffs << '\n'
              << render_summary(summarize(result.records));
    return 0;
}

int cmd_repair_eval(const RunConfig& cfg) {
    Resources r;
    load_lexicon(cfg, r);
    load_corpus(cfg, r);
    NoiseParams n = cfg.noise;
    n.rng_seed = cfg.seed;
    const auto rep = evaluate_repair(*r.corpus, n, cfg.k, std::min(cfg.sample, r.corpus->size()), r.inv());
    std::printf("corpus %zu\nsample %zu\nk %zu\np_delete %.4f\np_substitute %.4f\nseed %llu\n", r.corpus->size(),
                rep.sample, rep.k, n.p_delete, n.p_substitute, static_cast<unsigned long long>(n.rng_seed));
    std::printf("top1_hits %zu\ntopk_hits %zu\ntop1_rate %.6f\ntopk_rate %.6f\nmean_distance %.6f\n", rep.top1_hits,
                rep.topk_hits, rep.top1_rate, rep.topk_rate, rep.mean_distance);
    return 0;
}

int cmd_augment(const RunConfig& cfg) {
    Resources r;
    load_lexicon(cfg, r);
    load_corpus(cfg, r);
    NoiseParams n = cfg.noise;
    n.rng_seed = cfg.seed;
    const auto dir = ensure_out(cfg);
    const auto path = dir / "training_pairs.tsv";
    std::ofstream out(path, std::ios::binary);
    const auto count = write_training_pairs(out, *r.corpus, cfg.times, n, r.inv());
    if (!out) throw std::runtime_error("write failed: " + path.string());
    std::cout << "pairs " << count << "\nfile " << path.string() << '\n';
    return 0;
}

int cmd_report(const RunConfig& cfg, const std::string& csv_path) {
    if (csv_path.empty()) throw ConfigError("report needs --csv");
    require_files({{"csv", csv_path}});
    std::ifstream in(csv_path);
    const auto records = read_csv(in, csv_path);
    std::cout << render_summary(summarize(records));
    return 0;
}

int cmd_serve(const RunConfig& cfg) {
    require_files({{"static_dir", cfg.static_dir}});
    Resources r;
    load_lexicon(cfg, r);
    load_corpus(cfg, r);
    load_suggester(cfg, r);

    net::asio::io_context ioc;
    SystemClock clock;
    net::AsioScheduler sched(ioc, clock);
    MetricsStore metrics;
    auto opts = relay_options(cfg);
    opts.retain_log = false;
    Relay relay(opts, sched, r.repair.get(), r.suggester.get(), metrics);

    const auto dir = ensure_out(cfg);
    std::ofstream events(dir / "events.jsonl", std::ios::binary | std::ios::app);
    relay.on_log([&events](const LogEntry& e) { events << canonical_line(e) << '\n' << std::flush; });

    net::ServerOptions so;
    so.http = net::parse_endpoint(cfg.listen);
    if (!cfg.line_listen.empty()) so.line = net::parse_endpoint(cfg.line_listen);
    so.static_dir = cfg.static_dir;
    net::Server server(ioc, relay, so);
    server.start();
    spdlog::info("listening on {}:{} (/device, /console){}", so.http.address().to_string(), server.http_port(),
                 so.line ? fmt::format(", line protocol on port {}", server.line_port()) : std::string());
    if (cfg.token.empty()) spdlog::warn("no token configured; connections are not authenticated");

    net::asio::signal_set signals(ioc, SIGINT, SIGTERM);
    signals.async_wait([&](const boost::system::error_code&, int sig) {
        spdlog::info("signal {}; shutting down", sig);
        server.stop();
        ioc.stop();
    });
    ioc.run();
    write_metrics(dir, metrics.snapshot(), cfg.deadlines);
    spdlog::info("wrote metrics to {}", dir.string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Human-in-the-loop voice relay: gateway, simulator and evaluation tools"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    std::string config_path;
    std::string csv_path;
    bool verbose = false;
    ConfigMap overrides;
    app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    // Flags share names with config keys and override them.
    auto flag = [&overrides](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(name, [&overrides, key](const std::string& v) { overrides[key] = v; }, help);
    };
    auto common = [&](CLI::App* sub) {
        flag(sub, "--seed", "seed", "RNG seed");
        flag(sub, "--out", "out", "Output directory");
        flag(sub, "--lexicon", "lexicon", "Pronunciation dictionary");
        flag(sub, "--corpus", "corpus", "Sentence corpus, one per line");
        flag(sub, "--features", "features", "Phoneme feature table");
    };

    auto* serve = app.add_subcommand("serve", "Run the gateway");
    common(serve);
    flag(serve, "--listen", "listen", "host:port for HTTP/WebSocket");
    flag(serve, "--line-listen", "line_listen", "host:port for the line-delimited TCP endpoint");
    flag(serve, "--token", "token", "Shared connection token");
    flag(serve, "--static-dir", "static_dir", "Console assets directory");
    flag(serve, "--suggester", "suggester", "corpus, none or http://host:port/path");

    auto* simulate = app.add_subcommand("simulate", "Run a scripted session against an in-process relay");
    common(simulate);
    flag(simulate, "--script", "script", "Device script file");
    flag(simulate, "--worker-model", "worker_model", "button, typist or absent");
    flag(simulate, "--suggester", "suggester", "corpus, none or http://host:port/path");
    flag(simulate, "--asr-del", "asr_del", "ASR word deletion probability");
    flag(simulate, "--asr-sub", "asr_sub", "ASR word substitution probability");

    auto* repair_eval = app.add_subcommand("repair-eval", "Measure transcript recovery under phoneme noise");
    common(repair_eval);
    flag(repair_eval, "--noise-del", "noise_del", "Phoneme deletion probability");
    flag(repair_eval, "--noise-sub", "noise_sub", "Phoneme substitution probability");
    flag(repair_eval, "--k", "k", "Rank cut-off");
    flag(repair_eval, "--sample", "sample", "Number of corpus sentences");

    auto* augment = app.add_subcommand("augment", "Write noisy phoneme / clean text training pairs");
    common(augment);
    flag(augment, "--times", "times", "Noisy copies per sentence");
    flag(augment, "--noise-del", "noise_del", "Phoneme deletion probability");
    flag(augment, "--noise-sub", "noise_sub", "Phoneme substitution probability");

    auto* report = app.add_subcommand("report", "Summarize a latency CSV");
    report->add_option("--csv", csv_path, "latency.csv from simulate or serve")->required();

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

    spdlog::set_default_logger(spdlog::stderr_color_mt("voicerelay"));
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    RunConfig cfg;
    try {
        ConfigMap values = config_path.empty() ? ConfigMap{} : load_config(config_path);
        for (const auto& [k, v] : overrides) values[k] = v;
        apply_config(values, cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*serve) return cmd_serve(cfg);
        if (*simulate) return cmd_simulate(cfg);
        if (*repair_eval) return cmd_repair_eval(cfg);
        if (*augment) return cmd_augment(cfg);
        if (*report) return cmd_report(cfg, csv_path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
