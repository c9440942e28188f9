// coachai command-line driver: simulation runs, oracle checks, the HTTP
// service and a terminal chat against the loopback channel.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "coachai/dialogue/script.hpp"
#include "coachai/error.hpp"
#include "coachai/service/coach_service.hpp"
#include "coachai/service/http_api.hpp"
#include "coachai/sim/experiment.hpp"

#ifndef COACHAI_DATA_DIR
#define COACHAI_DATA_DIR "data"
#endif

namespace {

using namespace coachai;

service::ServiceConfig load_config(const std::string& path) {
    auto cfg = path.empty() ? service::ServiceConfig::load(std::string(COACHAI_DATA_DIR) + "/config.json")
                            : service::ServiceConfig::load(path);
    cfg.apply_environment();
    return cfg;
}

int print_trial(const sim::TrialReport& r) {
    std::cout << r.name << ": " << r.counter.agreements << "/" << r.counter.comparisons << " agree ("
              << r.seconds << " s)\n";
    for (const auto& f : r.counter.failures) std::cout << "  " << f << "\n";
    return r.counter.all_agreed() ? 0 : 1;
}

service::HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coachai: coach-in-the-loop activity recommendation"};
    app.require_subcommand(1);

    std::string spec_path, config_path, out_dir;
    auto* simulate = app.add_subcommand("simulate", "Run the end-to-end simulation and write a report");
    simulate->add_option("--spec", spec_path, "Cohort spec (JSON)")->required()->check(CLI::ExistingFile);
    simulate->add_option("--config", config_path, "Service config (JSON)")->check(CLI::ExistingFile);
    simulate->add_option("--out", out_dir, "Output directory")->required();

    std::string module;
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    std::string ontology_path;
    auto* oracle = app.add_subcommand("oracle-check", "Compare a module against its brute-force oracle");
    oracle->add_option("--module", module, "clustering | partition | knn | dedup")
        ->required()
        ->check(CLI::IsMember({"clustering", "partition", "knn", "dedup"}));
    oracle->add_option("--trials", trials, "Number of random instances")->check(CLI::PositiveNumber);
    oracle->add_option("--seed", seed, "RNG seed");
    oracle->add_option("--ontology", ontology_path, "Ontology for dedup checks")->check(CLI::ExistingFile);

    auto* serve = app.add_subcommand("serve", "Serve the /v1 HTTP API");
    serve->add_option("--config", config_path, "Service config (JSON)")->check(CLI::ExistingFile);

    std::string external_ref = "terminal", name = "Terminal user";
    auto* chat = app.add_subcommand("chat", "Chat with the bot from the terminal (loopback channel)");
    chat->add_option("--config", config_path, "Service config (JSON)")->check(CLI::ExistingFile);
    chat->add_option("--external-ref", external_ref, "Patient reference; reuses the session if registered");
    chat->add_option("--name", name, "Patient name for a new registration");

    std::string script_path, concepts_path;
    auto* print = app.add_subcommand("print-script", "Parse a dialogue script and print its normal form");
    print->add_option("script", script_path, "Script file")->required()->check(CLI::ExistingFile);
    print->add_option("--concepts", concepts_path, "Concept library")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            const auto spec = sim::load_cohort_spec(spec_path);
            const auto cfg = load_config(config_path);
            const auto report = sim::run_experiment(spec, cfg, service::Resources::load(cfg));
            sim::write_report(report, out_dir);
            std::cout << report.text;
            return report.all_agreed() ? 0 : 1;
        }
        if (*oracle) {
            if (module == "clustering") return print_trial(sim::check_clustering_fixed_points(trials, seed));
            if (module == "knn") return print_trial(sim::check_knn(trials, seed));
            if (module == "partition") {
                const auto r = sim::check_small_partitions(trials, seed, SeedMode::adherence_bands);
                std::cout << "partition exact: " << r.exact.agreements << "/" << r.exact.comparisons
                          << ", fixed point: " << r.fixed_point.agreements << "/" << r.fixed_point.comparisons
                          << " (" << r.seconds << " s)\n";
                // Lloyd may settle in a local optimum; only fixed-point failures are disagreements.
                return r.fixed_point.all_agreed() ? 0 : 1;
            }
            const auto path = ontology_path.empty() ? std::string(COACHAI_DATA_DIR) + "/starter_ontology.json" : ontology_path;
            return print_trial(sim::check_combine(trials, seed, load_ontology_file(path)));
        }
        if (*serve) {
            const auto cfg = load_config(config_path);
            auto sink = std::make_shared<service::StreamSink>(std::cout);
            auto svc = service::CoachService::open(cfg, service::system_now, sink);
            service::HttpServer server(*svc);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            const int port = server.bind(cfg.host, cfg.port);
            if (port < 0) {
                std::cerr << "cannot bind " << cfg.host << ":" << cfg.port << "\n";
                return 1;
            }
            std::cerr << "listening on http://" << cfg.host << ":" << port << "/v1\n";
            server.serve();
            return 0;
        }
        if (*chat) {
            const auto cfg = load_config(config_path);
            auto sink = std::make_shared<service::LoopbackSink>();
            auto svc = service::CoachService::open(cfg, service::system_now, sink);
            std::string key;
            for (const auto& p : svc->list_patients())
                if (p.external_ref == external_ref) key = service::CoachService::session_key_for(p.id);
            if (key.empty()) {
                service::Registration reg;
                reg.external_ref = external_ref;
                reg.name = name;
                const auto res = svc->register_patient(reg);
                key = res.session_key;
                std::cout << "bot> " << res.first_message.text << "\n";
            }
            for (std::string line; std::cout << "you> " << std::flush, std::getline(std::cin, line);) {
                if (line.empty()) continue;
                const auto out = svc->chat_webhook({key, line, service::system_now()});
                std::cout << "bot> " << out.text << "\n";
                for (const auto& m : sink->drain()) std::cout << "bot> " << m.text << "\n";
            }
            return 0;
        }
        if (*print) {
            auto slurp = [](const std::string& p) {
                std::ifstream in(p);
                std::stringstream b;
                b << in.rdbuf();
                return b.str();
            };
            dialogue::ConceptLibrary lib;
            if (!concepts_path.empty()) lib = dialogue::parse_concept_library(slurp(concepts_path));
            std::cout << dialogue::print_script(dialogue::parse_script(slurp(script_path), lib));
            return 0;
        }
    } catch (const coachai::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
