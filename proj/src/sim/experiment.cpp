#include "coachai/sim/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "coachai/error.hpp"
#include "coachai/recommender.hpp"
#include "coachai/sim/oracles.hpp"

namespace coachai::sim {

namespace {

using Clock = std::chrono::steady_clock;
using oracle::Point;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Empty string when `model` is a Lloyd fixed point of `points`.
std::string fixed_point_violation(const std::vector<Point>& points, const ClusterModel& model) {
    const auto k = model.centroids.size();
    if (oracle::nearest(points, model.centroids) != model.labels) return "a point is not labelled with its nearest centroid";
    const auto means = oracle::member_means(points, model.labels, k);
    for (std::size_t c = 0; c < k; ++c) {
        if (means[c].empty()) return "cluster " + std::to_string(c) + " is empty";
        for (std::size_t j = 0; j < means[c].size(); ++j)
            if (std::fabs(means[c][j] - model.centroids[c][j]) > 1e-9)
                return "centroid " + std::to_string(c) + " differs from its member mean";
    }
    for (std::size_t i = 1; i < model.wcss_history.size(); ++i) {
        const double prev = model.wcss_history[i - 1];
        if (model.wcss_history[i] > prev + 1e-9 * (1.0 + std::fabs(prev)))
            return "WCSS increased at step " + std::to_string(i);
    }
    return {};
}

Band random_band(Rng& rng) { return kBands[rng.below(3)]; }

// Completion counts ranked by count desc, id asc.
std::vector<std::string> ranked(const std::map<std::string, std::size_t>& counts) {
    std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> out;
    for (const auto& [id, n] : v) out.push_back(id);
    return out;
}

std::map<std::string, std::size_t> completions(const PatientProfile& p) {
    std::map<std::string, std::size_t> out;
    for (const auto& r : p.adherence_history)
        if (r.completed && !r.pending) ++out[r.activity_id];
    return out;
}

std::string nearest_word(const std::map<std::string, double, std::less<>>& table, double value) {
    std::string best;
    double best_d = INFINITY;
    for (const auto& [word, v] : table) {
        if (std::fabs(v - value) < best_d) {
            best_d = std::fabs(v - value);
            best = word;
        }
    }
    return best;
}

std::string pending_label(const service::CoachService& svc, const std::string& patient_id) {
    const auto s = svc.get_session(patient_id);
    if (!s.pending) return {};
    const auto* t = svc.resources().script.find_topic(s.pending->topic);
    return t ? t->rules[s.pending->index].label : std::string{};
}

std::string intake_answer(const std::string& label, const PatientProfile& p, const dialogue::IntakeTables& tables) {
    if (label == "AGE") return "I'm " + fmt("%.0f", *p.age);
    if (label == "BMI") return fmt("%.1f", *p.bmi);
    if (label == "DIET") return "mostly " + nearest_word(tables.diet, *p.diet_score);
    if (label == "SLEEP_HOURS") return "about " + fmt("%.1f", *p.sleep_hours) + " hours";
    if (label == "ACTIVITY_LEVEL") return "I'd say " + nearest_word(tables.activity, *p.activity_level);
    if (label == "PROFESSION") return "I work as a " + *p.profession;
    return "ok";
}

// Z-scored feature vector computed from the snapshot's stored statistics.
Point query_vector(const PatientProfile& p, const Normalization& norm, const ProfessionMap& professions) {
    const double prof = professions.find(*p.profession).value_or(ProfessionMap::kDefaultOrdinal);
    const double raw[] = {*p.bmi, *p.diet_score, *p.sleep_hours, *p.activity_level, prof, *p.age};
    Point q;
    for (std::size_t j = 0; j < 6; ++j)
        q.push_back(norm.stddev[j] == 0.0 ? 0.0 : (raw[j] - norm.mean[j]) / norm.stddev[j]);
    return q;
}

std::vector<std::size_t> sizes_of(const std::vector<std::size_t>& labels, std::size_t k) {
    std::vector<std::size_t> out(k, 0);
    for (auto l : labels) ++out[l];
    return out;
}

}  // namespace

void AgreementCounter::record(bool agreed, const std::string& what) {
    ++comparisons;
    if (agreed) ++agreements;
    else if (failures.size() < 5) failures.push_back(what);
}

void to_json(nlohmann::json& j, const AgreementCounter& c) {
    j = {{"comparisons", c.comparisons}, {"agreements", c.agreements}, {"failures", c.failures}};
}

TrialReport check_clustering_fixed_points(std::size_t trials, std::uint64_t seed) {
    const auto t0 = Clock::now();
    TrialReport rep{"clustering fixed point", {}, 0.0};
    Rng rng = Rng(seed).split("fixed-point");
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 3 + rng.below(48);
        std::vector<Point> points;
        std::vector<Band> bands;
        // Every fourth instance has blob structure, the rest are isotropic.
        std::vector<Point> centers;
        if (t % 4 == 0)
            for (int c = 0; c < 3; ++c) {
                Point ctr;
                for (int j = 0; j < 6; ++j) ctr.push_back(rng.uniform(-5.0, 5.0));
                centers.push_back(ctr);
            }
        for (std::size_t i = 0; i < n; ++i) {
            Point p;
            for (int j = 0; j < 6; ++j) {
                const double base = centers.empty() ? 0.0 : centers[i % 3][j];
                p.push_back(base + (centers.empty() ? 1.0 : 0.5) * rng.normal());
            }
            points.push_back(std::move(p));
            bands.push_back(random_band(rng));
        }
        const auto model = cluster(points, bands, ClusteringConfig{3, 100, SeedMode::adherence_bands});
        const auto why = fixed_point_violation(points, model);
        rep.counter.record(why.empty(), "trial " + std::to_string(t) + ": " + why);
    }
    rep.seconds = seconds_since(t0);
    return rep;
}

PartitionReport check_small_partitions(std::size_t trials, std::uint64_t seed, SeedMode mode) {
    const auto t0 = Clock::now();
    PartitionReport rep;
    Rng rng = Rng(seed).split("partition");
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.below(7);
        const std::size_t d = 1 + rng.below(3);
        const std::size_t n1 = 1 + rng.below(n - 1);
        const double spread = 1.0;  // each coordinate within +-spread of its blob centre
        const double diameter = 2.0 * spread * std::sqrt(static_cast<double>(d));
        Point dir;
        double norm = 0.0;
        while (norm < 1e-6) {
            dir.clear();
            norm = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                dir.push_back(rng.normal());
                norm += dir.back() * dir.back();
            }
            norm = std::sqrt(norm);
        }
        const double gap = 11.0 * diameter;  // nearest cross-blob pair >= 10x diameter
        std::vector<Point> points;
        for (std::size_t i = 0; i < n; ++i) {
            Point p;
            for (std::size_t j = 0; j < d; ++j)
                p.push_back((i < n1 ? 0.0 : gap * dir[j] / norm) + rng.uniform(-spread, spread));
            points.push_back(std::move(p));
        }
        for (std::size_t i = n; i > 1; --i) std::swap(points[i - 1], points[rng.below(i)]);
        std::vector<Band> bands;
        for (std::size_t i = 0; i < n; ++i) bands.push_back(random_band(rng));

        const auto model = cluster(points, bands, ClusteringConfig{2, 100, mode});
        const auto best = oracle::min_wcss_two_partition(points);
        rep.exact.record(oracle::canonical_labels(model.labels) == best.labels,
                         "trial " + std::to_string(t) + ": partition differs from the exhaustive optimum");
        const auto why = fixed_point_violation(points, model);
        rep.fixed_point.record(why.empty(), "trial " + std::to_string(t) + ": " + why);
    }
    rep.seconds = seconds_since(t0);
    return rep;
}

TrialReport check_knn(std::size_t trials, std::uint64_t seed, std::size_t n) {
    const auto t0 = Clock::now();
    TrialReport rep{"knn", {}, 0.0};
    Rng rng = Rng(seed).split("knn");
    for (std::size_t t = 0; t < trials; ++t) {
        // Odd trials use a coarse integer grid so equal distances are common.
        const bool grid = t % 2 == 1;
        auto coord = [&] { return grid ? static_cast<double>(rng.below(5)) - 2.0 : rng.normal(); };
        std::vector<Point> points(n);
        for (auto& p : points)
            for (int j = 0; j < 6; ++j) p.push_back(coord());
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "id-%03zu", i);
            ids.emplace_back(buf);
        }
        for (std::size_t i = n; i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
        Point q;
        for (int j = 0; j < 6; ++j) q.push_back(coord());
        const std::size_t k = 1 + rng.below(n + 5);

        const auto got = knn_neighbors(q, points, ids, k);
        std::vector<std::size_t> got_idx;
        for (const auto& nb : got) got_idx.push_back(nb.index);
        const auto want = oracle::knn(q, points, ids, k);
        rep.counter.record(got_idx == want, "trial " + std::to_string(t) + ": neighbour order differs");
    }
    rep.seconds = seconds_since(t0);
    return rep;
}

TrialReport check_combine(std::size_t trials, std::uint64_t seed, const ActivityOntology& ontology) {
    const auto t0 = Clock::now();
    TrialReport rep{"combine", {}, 0.0};
    Rng rng = Rng(seed).split("combine");
    std::vector<std::string> ids;
    for (const auto& a : ontology.activities()) ids.push_back(a.id);
    for (std::size_t t = 0; t < trials; ++t) {
        std::array<std::vector<std::string>, 3> lists;
        for (auto& list : lists) {
            auto pool = ids;
            const std::size_t len = rng.below(6);
            for (std::size_t i = 0; i < len; ++i) {
                const std::size_t r = i + rng.below(pool.size() - i);
                std::swap(pool[i], pool[r]);
                list.push_back(pool[i]);
            }
        }
        const double threshold = t % 10 == 0 ? 0.0 : rng.uniform(0.0, 0.5);
        const auto want = oracle::union_dedup(lists, ontology, threshold, 5);
        std::vector<oracle::Merged> got;
        bool threw = false;
        try {
            for (const auto& c : combine(lists[0], lists[1], lists[2], ontology, threshold, 5))
                got.push_back({c.activity_id, static_cast<std::size_t>(c.provenance), c.support_count});
        } catch (const Error& e) {
            threw = e.kind() == ErrorKind::invalid_argument;
        }
        const bool all_empty = lists[0].empty() && lists[1].empty() && lists[2].empty();
        const bool ok = all_empty ? threw && want.empty() : !threw && got == want;
        rep.counter.record(ok, "trial " + std::to_string(t) + ": combined list differs");
    }
    rep.seconds = seconds_since(t0);
    return rep;
}

bool ExperimentReport::all_agreed() const { return document.value("all_agreed", false); }

ExperimentReport run_experiment(const CohortSpec& spec, const service::ServiceConfig& cfg,
                                const service::Resources& resources) {
    spec.validate();
    const auto cohort = generate(spec, cfg.recommender.thresholds);
    auto sink = std::make_shared<service::LoopbackSink>();
    // 2026-01-01T00:00:00Z, one second per service call.
    service::CoachService svc(cfg, resources, service::Store{}, service::logical_clock(1'767'225'600'000, 1000), sink);
    const auto& ontology = resources.ontology;
    const auto& rcfg = cfg.recommender;

    for (const auto& p : cohort.patients) svc.import_patient(p);

    std::map<std::string, AgreementCounter> counters;
    for (const char* name : {"refresh_bypass", "fixed_point", "feature_vector", "cluster_selection", "knn", "combine",
                             "provenance", "integrity"})
        counters[name];
    nlohmann::json snapshots = nlohmann::json::array();

    auto check_snapshot = [&](const std::string& phase) {
        const auto snap = *svc.latest_snapshot();
        const auto& g = snap.groups;
        std::vector<Point> points;
        std::vector<Band> bands;
        for (const auto& m : g.members) {
            points.push_back(m.vector);
            bands.push_back(m.band);
        }
        const auto direct = cluster(points, bands, snap.config.clustering);
        counters["refresh_bypass"].record(direct.labels == g.band_model.labels && direct.centroids == g.band_model.centroids,
                                          snap.id + ": band model differs from a direct clustering call");
        auto why = fixed_point_violation(points, g.band_model);
        counters["fixed_point"].record(why.empty(), snap.id + " band model: " + why);
        nlohmann::json row = {{"id", snap.id},
                              {"phase", phase},
                              {"members", g.members.size()},
                              {"cluster_sizes", sizes_of(g.band_model.labels, g.band_model.k())},
                              {"iterations", g.band_model.iterations_run},
                              {"converged", g.band_model.converged},
                              {"wcss_history", g.band_model.wcss_history}};
        if (g.high_model) {
            std::vector<Point> high;
            for (auto i : g.high_members) high.push_back(g.members[i].vector);
            why = fixed_point_violation(high, *g.high_model);
            counters["fixed_point"].record(why.empty(), snap.id + " HIGH model: " + why);
            row["high_cluster_sizes"] = sizes_of(g.high_model->labels, g.high_model->k());
            row["high_wcss_history"] = g.high_model->wcss_history;
        } else {
            row["high_cluster_sizes"] = nlohmann::json::array();
        }
        snapshots.push_back(std::move(row));
    };

    auto verify_case = [&](const RecommendationCase& rc) {
        const auto snap = *svc.latest_snapshot();
        if (snap.id != rc.snapshot_id) throw Error(ErrorKind::validation, rc.id + " was not built from the latest snapshot");
        const auto& g = snap.groups;
        const auto patient = svc.get_patient(rc.patient_id);
        std::map<std::string, PatientProfile> by_id;
        for (auto& p : svc.list_patients()) by_id.emplace(p.id, std::move(p));

        const auto q = query_vector(patient, g.normalization, resources.professions);
        const auto main_q = g.normalization.apply(vectorize(patient, resources.professions).to_vector());
        bool same = q.size() == main_q.size();
        for (std::size_t j = 0; same && j < q.size(); ++j) same = std::fabs(q[j] - main_q[j]) <= 1e-12;
        counters["feature_vector"].record(same, rc.id + ": feature vector differs");

        auto cluster_list = [&](const ClusterModel& model, const std::vector<std::size_t>& member_idx,
                                std::optional<std::size_t> got_cluster, const char* what) {
            const auto c = oracle::nearest({q}, model.centroids)[0];
            counters["cluster_selection"].record(got_cluster == c, rc.id + ": " + what + " cluster differs");
            std::map<std::string, std::size_t> counts;
            for (std::size_t i = 0; i < member_idx.size(); ++i)
                if (model.labels[i] == c)
                    for (const auto& [a, n] : completions(by_id.at(g.members[member_idx[i]].id))) counts[a] += n;
            return ranked(counts);
        };
        std::vector<std::string> pa1, pa2, pa;
        if (g.high_model) pa1 = cluster_list(*g.high_model, g.high_members, recommend_high_adherence(q, g).cluster, "HIGH");
        std::vector<std::size_t> everyone(g.members.size());
        for (std::size_t i = 0; i < everyone.size(); ++i) everyone[i] = i;
        pa2 = cluster_list(g.band_model, everyone, recommend_different_adherence(q, g).cluster, "band");

        std::vector<Point> vectors;
        std::vector<std::string> ids;
        for (const auto& m : g.members) {
            vectors.push_back(m.vector);
            ids.push_back(m.id);
        }
        const auto want_nb = oracle::knn(q, vectors, ids, rcfg.knn_k, rc.patient_id);
        std::vector<std::size_t> got_nb;
        for (const auto& nb : knn_neighbors(q, g, rcfg.knn_k, rc.patient_id)) got_nb.push_back(nb.index);
        counters["knn"].record(got_nb == want_nb, rc.id + ": neighbours differ");
        std::map<std::string, std::size_t> nb_counts;
        for (auto i : want_nb)
            for (const auto& [a, n] : completions(by_id.at(ids[i]))) nb_counts[a] += n;
        pa = ranked(nb_counts);

        const std::array<std::vector<std::string>, 3> lists{pa1, pa2, pa};
        const auto want = oracle::union_dedup(lists, ontology, rcfg.dedup_threshold, rcfg.candidate_cap);
        std::vector<oracle::Merged> got;
        for (const auto& c : rc.candidates)
            got.push_back({c.activity_id, static_cast<std::size_t>(c.provenance), c.support_count});
        counters["combine"].record(got == want, rc.id + ": candidates differ from the recomputed union");
        for (const auto& c : rc.candidates) {
            const auto src = static_cast<std::size_t>(c.provenance);
            bool ok = std::find(lists[src].begin(), lists[src].end(), c.activity_id) != lists[src].end();
            for (std::size_t s = 0; s < src; ++s)
                ok = ok && std::find(lists[s].begin(), lists[s].end(), c.activity_id) == lists[s].end();
            counters["provenance"].record(ok, rc.id + ": " + c.activity_id + " has the wrong provenance");
        }
    };

    svc.refresh_models();
    check_snapshot("initial");

    Rng rng = Rng(spec.seed).split("newcomers");
    nlohmann::json newcomers = nlohmann::json::array();
    std::map<std::string, std::size_t> provenance_mix = {{"HIGH_ADH", 0}, {"DIFF_ADH", 0}, {"KNN", 0}};
    std::size_t cold_starts = 0;
    for (std::size_t i = 0; i < spec.fresh_patients; ++i) {
        const std::size_t b = i % 3;
        const auto profile = draw_patient(spec.bands[b], rng);
        service::Registration reg;
        char ref[32];
        std::snprintf(ref, sizeof ref, "new-%03zu", i + 1);
        reg.external_ref = ref;
        reg.name = std::string("Newcomer ") + std::to_string(i + 1);
        const auto res = svc.register_patient(reg);
        const auto& pid = res.patient_id;

        std::size_t turns = 0;
        while (svc.get_session(pid).phase == dialogue::Phase::intake && turns < 24) {
            svc.chat_webhook({res.session_key, intake_answer(pending_label(svc, pid), profile, resources.intake_tables), 0});
            ++turns;
        }
        if (svc.get_session(pid).phase != dialogue::Phase::idle)
            throw Error(ErrorKind::validation, "intake did not finish for " + pid);

        const auto rc = svc.get_recommendations(pid);
        verify_case(rc);
        nlohmann::json row = {{"patient_id", pid},       {"band_profile", to_string(kBands[b])},
                              {"intake_turns", turns},   {"case_id", rc.id},
                              {"snapshot_id", rc.snapshot_id}, {"candidates", rc.candidates},
                              {"flags", rc.flags}};
        for (const auto& c : rc.candidates) ++provenance_mix[std::string(to_string(c.provenance))];
        if (rc.candidates.empty()) {
            ++cold_starts;
            svc.decide(rc.id, service::Decision::reject, std::nullopt, "cold start: needs manual assignment");
            row["accepted"] = nullptr;
        } else {
            const auto top = rc.candidates.front().activity_id;
            svc.decide(rc.id, service::Decision::accept, top, "auto-accepted by simulator");
            row["accepted"] = top;
            const bool completed = rng.uniform() < spec.bands[b].completion_rate;
            const int motivation = static_cast<int>(completed ? 3 + rng.below(3) : 1 + rng.below(3));
            svc.request_feedback(pid);
            std::size_t fb_turns = 0;
            while (svc.get_session(pid).phase == dialogue::Phase::feedback && fb_turns < 10) {
                const auto label = pending_label(svc, pid);
                std::string text = "ok";
                if (label == "COMPLETED") text = completed ? "yes I did it" : "no I skipped it";
                else if (label == "MOTIVATION") text = std::to_string(motivation);
                else if (label == "NOTES") text = completed ? "felt good" : "too busy this week";
                svc.chat_webhook({res.session_key, text, 0});
                ++fb_turns;
            }
            const auto after = svc.get_patient(pid);
            const auto& last = after.adherence_history.back();
            row["feedback"] = {{"completed", last.completed},
                               {"pending", last.pending},
                               {"motivation", last.motivation_rating ? nlohmann::json(*last.motivation_rating)
                                                                     : nlohmann::json(nullptr)},
                               {"turns", fb_turns}};
        }
        newcomers.push_back(std::move(row));
    }

    svc.refresh_models();
    check_snapshot("final");
    try {
        svc.check_integrity();
        counters["integrity"].record(true, "");
    } catch (const Error& e) {
        counters["integrity"].record(false, e.what());
    }

    bool all = true;
    nlohmann::json agreement = nlohmann::json::object();
    for (const auto& [name, c] : counters) {
        agreement[name] = c;
        all = all && c.all_agreed();
    }
    const auto counts = largest_remainder(spec.n, spec.band_mix);
    ExperimentReport rep;
    rep.document = {
        {"generated_at", service::system_now()},
        {"seed", spec.seed},
        {"spec", spec},
        {"config", rcfg},
        {"cohort", {{"n", spec.n}, {"band_counts", {{"HIGH", counts[0]}, {"MEDIUM", counts[1]}, {"LOW", counts[2]}}}}},
        {"snapshots", snapshots},
        {"newcomers", newcomers},
        {"provenance_mix", provenance_mix},
        {"cold_starts", cold_starts},
        {"decisions", svc.decision_log().size()},
        {"notifications", svc.notifications().size()},
        {"messages_sent", sink->drain().size()},
        {"oracle_agreement", agreement},
        {"all_agreed", all},
    };

    std::ostringstream t;
    t << "coachai simulation report\n";
    t << "generated_at: " << rep.document["generated_at"].get<Timestamp>() << "\n";
    t << "seed: " << spec.seed << "\n";
    t << "cohort: n=" << spec.n << " HIGH=" << counts[0] << " MEDIUM=" << counts[1] << " LOW=" << counts[2] << "\n\n";
    for (const auto& s : snapshots) {
        t << "snapshot " << s["id"].get<std::string>() << " (" << s["phase"].get<std::string>()
          << "): members=" << s["members"] << " sizes=" << s["cluster_sizes"].dump()
          << " high_sizes=" << s["high_cluster_sizes"].dump() << " iterations=" << s["iterations"] << "\n";
        t << "  wcss:";
        for (const auto& w : s["wcss_history"]) t << " " << fmt("%.6f", w.get<double>());
        t << "\n";
    }
    t << "\nnewcomers: " << newcomers.size() << " cold_starts: " << cold_starts << "\n";
    for (const auto& n : newcomers) {
        t << "  " << n["patient_id"].get<std::string>() << " [" << n["band_profile"].get<std::string>() << "]";
        for (const auto& c : n["candidates"])
            t << " " << c["activity_id"].get<std::string>() << "/" << c["provenance"].get<std::string>() << "x"
              << c["support_count"];
        t << " -> " << (n["accepted"].is_null() ? std::string("manual") : n["accepted"].get<std::string>()) << "\n";
    }
    t << "\nprovenance mix:";
    for (const auto& [k, v] : provenance_mix) t << " " << k << "=" << v;
    t << "\n\noracle agreement:\n";
    for (const auto& [name, c] : counters)
        t << "  " << name << ": " << c.agreements << "/" << c.comparisons << (c.all_agreed() ? "" : "  DISAGREE") << "\n";
    t << "\nresult: " << (all ? "all oracles agree" : "DISAGREEMENTS FOUND") << "\n";
    rep.text = t.str();
    return rep;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "report.json") << report.document.dump(2) << "\n";
    std::ofstream(dir / "report.txt") << report.text;
}

std::string stable_text(const ExperimentReport& report) {
    auto doc = report.document;
    doc.erase("generated_at");
    std::string text;
    std::istringstream in(report.text);
    for (std::string line; std::getline(in, line);)
        if (!line.starts_with("generated_at:")) text += line + "\n";
    return doc.dump(2) + "\n" + text;
}

}  // namespace coachai::sim
