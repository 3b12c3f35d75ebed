#include "jamaware/experiments.hpp"

#include "jamaware/classifier.hpp"
#include "jamaware/jammer_ops.hpp"
#include "jamaware/metrics.hpp"
#include "jamaware/transport.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace jamaware {

namespace {

struct KindEntry {
    ExperimentKind kind;
    const char* name;
};

constexpr KindEntry kKinds[] = {
    {ExperimentKind::DETECT, "DETECT"},         {ExperimentKind::ROC, "ROC"},
    {ExperimentKind::SUPPRESS, "SUPPRESS"},     {ExperimentKind::CHARACTERIZE, "CHARACTERIZE"},
    {ExperimentKind::CLASSIFY, "CLASSIFY"},     {ExperimentKind::CONVERT, "CONVERT"},
    {ExperimentKind::AMC, "AMC"},               {ExperimentKind::ANTIJAM, "ANTIJAM"},
    {ExperimentKind::KERNELS, "KERNELS"},       {ExperimentKind::FUZZ, "FUZZ"},
    {ExperimentKind::CALIBRATE, "CALIBRATE"},
};

// Seeds of the independent runs that make up one experiment point.
constexpr std::uint64_t kTrainOffset = 101;
constexpr std::uint64_t kCalibrationOffset = 202;
constexpr std::uint64_t kTestOffset = 303;
constexpr std::uint64_t kReplayOffset = 404;

std::uint64_t derived(std::uint64_t seed, std::uint64_t offset) { return seed * 1000 + offset; }

std::string fmt(double x) {
    std::ostringstream o;
    o.precision(10);
    o << x;
    return o.str();
}

std::string point_label(const std::vector<std::pair<std::string, double>>& axes, std::uint64_t seed) {
    std::string s;
    for (const auto& [k, v] : axes) s += k + fmt(v) + "_";
    return s + "seed" + std::to_string(seed);
}

std::vector<double> to_vector(const Vec& v) { return {v.data(), v.data() + v.size()}; }

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// Window covering the second half of the run when none is configured.
ScenarioConfig with_default_window(ScenarioConfig sc) {
    if (sc.jammer.pattern == JammerPattern::WINDOWED && sc.jammer.on_windows.empty())
        sc.jammer.on_windows = {{sc.n_steps / 2, sc.n_steps}};
    return sc;
}

class ReferenceCache {
public:
    ReferenceCache(const ExperimentSpec& spec) : spec_(spec) {}

    const ReferenceModel& get(double snr, std::uint64_t seed) {
        const auto key = std::make_pair(snr, seed);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            ScenarioConfig base = spec_.scenario;
            base.channel.snr_db = snr;
            it = cache_
                     .emplace(key, build_reference(base, derived(seed, kTrainOffset), derived(seed, kCalibrationOffset),
                                                   spec_.vocab_nodes, spec_.n_particles))
                     .first;
        }
        return it->second;
    }

private:
    const ExperimentSpec& spec_;
    std::map<std::pair<double, std::uint64_t>, ReferenceModel> cache_;
};

FilterOptions filter_options(const ExperimentSpec& spec, std::uint64_t seed) {
    FilterOptions fo;
    fo.n_particles = spec.n_particles;
    fo.seed = seed;
    return fo;
}

Scenario jammed_scenario(const ExperimentSpec& spec, double snr, double jsr, std::uint64_t seed) {
    ScenarioConfig sc = with_default_window(spec.scenario);
    sc.channel.snr_db = snr;
    sc.channel.jsr_db = jsr;
    sc.jammer.enabled = true;
    sc.seed = seed;
    sc.jammer.seed = seed + 7;
    return synthesize_scenario(sc);
}

void roc_rows(std::ostringstream& o, const char* detector, const RocCurve& c) {
    for (const auto& p : c.points) o << detector << ',' << fmt(p.threshold) << ',' << fmt(p.p_fa) << ',' << fmt(p.p_d) << '\n';
}

// ----------------------------------------------------------------- detection

struct DetectionPoint {
    double p_d = 0.0;
    double p_fa = 0.0;
    RocCurve cla;
    RocCurve ed;
    std::vector<StepOutput> trace;
};

DetectionPoint detection_point(const ExperimentSpec& spec, const ReferenceModel& ref, double snr, double jsr,
                               std::uint64_t seed) {
    const Scenario sc = jammed_scenario(spec, snr, jsr, derived(seed, kTestOffset));
    Mmjpf filter(ref.vocab, filter_options(spec, derived(seed, kTestOffset)));
    DetectionPoint out;
    out.trace = filter.run(build_generalized_observations(sc.grid));
    const std::vector<double> energy = energy_detector(sc.grid.samples);

    std::vector<double> cla_scores, ed_scores;
    std::vector<std::uint8_t> labels;
    int det = 0, fa = 0, n1 = 0, n0 = 0;
    for (std::size_t k = 0; k < out.trace.size(); ++k) {
        const double c = out.trace[k].abnormality.cla;
        const std::uint8_t lab = sc.step_labels[k + 1];
        cla_scores.push_back(c);
        ed_scores.push_back(energy[k + 1]);
        labels.push_back(lab);
        const bool flag = c > ref.calibration.eta;
        if (lab) {
            ++n1;
            det += flag;
        } else {
            ++n0;
            fa += flag;
        }
    }
    out.p_d = n1 ? static_cast<double>(det) / n1 : 0.0;
    out.p_fa = n0 ? static_cast<double>(fa) / n0 : 0.0;
    out.cla = roc(cla_scores, labels);
    out.ed = roc(ed_scores, labels);
    return out;
}

ExperimentResult run_detection(const ExperimentSpec& spec) {
    ExperimentResult res{spec.kind, {}, {}};
    ReferenceCache refs(spec);
    std::ostringstream metrics;
    metrics << "snr_db,jsr_db,seed,eta,p_d,p_fa,auc_cla,auc_ed,acc_cla,acc_ed\n";
    auto points = nlohmann::json::array();
    std::map<std::pair<double, double>, std::vector<const nlohmann::json*>> by_axis;
    for (double snr : spec.snr_db)
        for (double jsr : spec.jsr_db)
            for (auto seed : spec.seeds) {
                const auto& ref = refs.get(snr, seed);
                const auto pt = detection_point(spec, ref, snr, jsr, seed);
                const std::string label = point_label({{"snr", snr}, {"jsr", jsr}}, seed);
                points.push_back({{"snr_db", snr},
                                  {"jsr_db", jsr},
                                  {"seed", seed},
                                  {"eta", ref.calibration.eta},
                                  {"p_d", pt.p_d},
                                  {"p_fa", pt.p_fa},
                                  {"auc_cla", pt.cla.auc},
                                  {"auc_ed", pt.ed.auc},
                                  {"acc_cla", pt.cla.acc},
                                  {"acc_ed", pt.ed.acc}});
                metrics << fmt(snr) << ',' << fmt(jsr) << ',' << seed << ',' << fmt(ref.calibration.eta) << ','
                        << fmt(pt.p_d) << ',' << fmt(pt.p_fa) << ',' << fmt(pt.cla.auc) << ',' << fmt(pt.ed.auc) << ','
                        << fmt(pt.cla.acc) << ',' << fmt(pt.ed.acc) << '\n';

                std::ostringstream r;
                r << "detector,threshold,p_fa,p_d\n";
                roc_rows(r, "CLA", pt.cla);
                roc_rows(r, "ED", pt.ed);
                res.artifacts.push_back({label + "/roc.csv", r.str()});
                if (spec.kind == ExperimentKind::DETECT) {
                    std::ostringstream t;
                    write_trace_csv(t, pt.trace);
                    res.artifacts.push_back({label + "/trace.csv", t.str()});
                    res.artifacts.push_back({label + "/vocab.json", serialize_vocabulary(ref.vocab)});
                }
            }
    // Medians over seeds per (SNR, JSR).
    auto medians = nlohmann::json::array();
    for (double snr : spec.snr_db)
        for (double jsr : spec.jsr_db) {
            std::vector<double> pd, pfa, ac, ae;
            for (const auto& p : points)
                if (p["snr_db"] == snr && p["jsr_db"] == jsr) {
                    pd.push_back(p["p_d"]);
                    pfa.push_back(p["p_fa"]);
                    ac.push_back(p["auc_cla"]);
                    ae.push_back(p["auc_ed"]);
                }
            medians.push_back({{"snr_db", snr},
                               {"jsr_db", jsr},
                               {"p_d", median(pd)},
                               {"p_fa", median(pfa)},
                               {"auc_cla", median(ac)},
                               {"auc_ed", median(ae)}});
        }
    res.summary = {{"points", points}, {"medians", medians}};
    res.artifacts.push_back({"metrics.csv", metrics.str()});
    return res;
}

// --------------------------------------------------------------- suppression

ExperimentResult run_suppression(const ExperimentSpec& spec) {
    ExperimentResult res{spec.kind, {}, {}};
    ReferenceCache refs(spec);
    const int d = spec.scenario.n_subcarriers;
    const ModulationScheme scheme = spec.scenario.signal_scheme;
    std::ostringstream metrics;
    metrics << "snr_db,jsr_db,seed,detected,mse_before,mse_suppressed,mse_jhat,ber_before,ber_after\n";
    auto points = nlohmann::json::array();
    for (double snr : spec.snr_db)
        for (double jsr : spec.jsr_db)
            for (auto seed : spec.seeds) {
                const auto& ref = refs.get(snr, seed);
                const Scenario sc = jammed_scenario(spec, snr, jsr, derived(seed, kTestOffset));
                const auto zs = build_generalized_observations(sc.grid);
                const auto clean = build_generalized_observations(sc.clean_grid());
                Mmjpf filter(ref.vocab, filter_options(spec, derived(seed, kTestOffset)));
                const auto trace = filter.run(zs);

                // Only detected steps are corrected.
                auto j_hat = extract_jammer(trace, ref.w_hat);
                std::vector<Vec> observed(zs.begin() + 1, zs.end());
                int detected = 0;
                for (std::size_t k = 0; k < trace.size(); ++k) {
                    if (trace[k].abnormality.cla > ref.calibration.eta)
                        ++detected;
                    else
                        j_hat[k].setZero();
                }
                const auto corrected = suppress(observed, j_hat);

                double mse_before = 0.0, mse_after = 0.0, mse_j = 0.0;
                std::size_t n = 0;
                Bits truth, before, after;
                for (std::size_t k = 0; k < trace.size(); ++k) {
                    const std::size_t t = k + 1;
                    if (!sc.step_labels[t]) continue;
                    const Vec c = clean[t].head(2 * d);
                    mse_before += mse(Vec(observed[k].head(2 * d)), c);
                    mse_after += mse(Vec(corrected[k].head(2 * d)), c);
                    Vec jt(2 * d);
                    jt << sc.jammer.col(static_cast<Eigen::Index>(t)).real(),
                        sc.jammer.col(static_cast<Eigen::Index>(t)).imag();
                    mse_j += mse(Vec(j_hat[k].head(2 * d)), jt);
                    ++n;
                    std::vector<cplx> tx(static_cast<std::size_t>(d)), rx0(tx.size()), rx1(tx.size());
                    for (int c_ = 0; c_ < d; ++c_) {
                        tx[static_cast<std::size_t>(c_)] = sc.signal(c_, static_cast<Eigen::Index>(t));
                        rx0[static_cast<std::size_t>(c_)] = {observed[k][c_], observed[k][d + c_]};
                        rx1[static_cast<std::size_t>(c_)] = {corrected[k][c_], corrected[k][d + c_]};
                    }
                    const Bits bt = demodulate(tx, scheme), b0 = demodulate(rx0, scheme), b1 = demodulate(rx1, scheme);
                    truth.insert(truth.end(), bt.begin(), bt.end());
                    before.insert(before.end(), b0.begin(), b0.end());
                    after.insert(after.end(), b1.begin(), b1.end());
                }
                if (n == 0) throw ConfigError("suppression needs attacked steps");
                mse_before /= static_cast<double>(n);
                mse_after /= static_cast<double>(n);
                mse_j /= static_cast<double>(n);
                const double ber0 = ber(before, truth), ber1 = ber(after, truth);
                points.push_back({{"snr_db", snr},
                                  {"jsr_db", jsr},
                                  {"seed", seed},
                                  {"detected", detected},
                                  {"mse_before", mse_before},
                                  {"mse_suppressed", mse_after},
                                  {"mse_jhat", mse_j},
                                  {"ber_before", ber0},
                                  {"ber_after", ber1}});
                metrics << fmt(snr) << ',' << fmt(jsr) << ',' << seed << ',' << detected << ',' << fmt(mse_before) << ','
                        << fmt(mse_after) << ',' << fmt(mse_j) << ',' << fmt(ber0) << ',' << fmt(ber1) << '\n';
            }
    auto medians = nlohmann::json::array();
    for (double snr : spec.snr_db)
        for (double jsr : spec.jsr_db) {
            std::map<std::string, std::vector<double>> cols;
            for (const auto& p : points)
                if (p["snr_db"] == snr && p["jsr_db"] == jsr)
                    for (const char* key : {"mse_before", "mse_suppressed", "mse_jhat", "ber_before", "ber_after"})
                        cols[key].push_back(p[key]);
            nlohmann::json m{{"snr_db", snr}, {"jsr_db", jsr}};
            for (const auto& [k, v] : cols) m[k] = median(v);
            medians.push_back(m);
        }
    res.summary = {{"points", points}, {"medians", medians}};
    res.artifacts.push_back({"suppression.csv", metrics.str()});
    return res;
}

// ----------------------------------------------------------- characterization

ExperimentResult run_characterization(const ExperimentSpec& spec) {
    ExperimentResult res{spec.kind, {}, {}};
    ReferenceCache refs(spec);
    auto points = nlohmann::json::array();
    std::ostringstream metrics;
    metrics << "snr_db,jsr_db,seed,attack_steps,median_reference,median_switched,ratio\n";
    for (double snr : spec.snr_db)
        for (double jsr : spec.jsr_db)
            for (auto seed : spec.seeds) {
                const auto& ref = refs.get(snr, seed);
                const double eta = ref.calibration.eta;
                const std::string label = point_label({{"snr", snr}, {"jsr", jsr}}, seed);

                const Scenario seen = jammed_scenario(spec, snr, jsr, derived(seed, kTestOffset));
                Mmjpf f1(ref.vocab, filter_options(spec, derived(seed, kTestOffset)));
                const auto trace = f1.run(build_generalized_observations(seen.grid));
                const auto steps = attack_steps(trace, eta);
                if (steps.empty()) {
                    points.push_back({{"snr_db", snr}, {"jsr_db", jsr}, {"seed", seed}, {"status", "no_attack_detected"}});
                    continue;
                }
                auto log = characterize_discrete(trace, steps);
                characterize_continuous(trace, log);

                Vocabulary updated = ref.vocab;
                updated.tag = "UPDATED";
                updated.pi = update_transition_matrix(ref.vocab.pi, trace, steps);
                updated.pi_tau.clear();  // the dwell-time slices are not re-estimated
                const FilterOptions fo_upd = update_dynamic_model(filter_options(spec, derived(seed, kReplayOffset)), log.u_jammer);

                const Scenario replay = jammed_scenario(spec, snr, jsr, derived(seed, kReplayOffset));
                const auto zr = build_generalized_observations(replay.grid);
                Mmjpf fr(ref.vocab, filter_options(spec, derived(seed, kReplayOffset)));
                Mmjpf fu(updated, fo_upd);
                const auto tr_ref = fr.run(zr);
                const auto tr_upd = fu.run(zr);
                const auto model = switch_models(tr_ref, tr_upd);

                std::vector<double> a, b;
                int upd_attacked = 0, ref_clean = 0, n_clean = 0;
                std::ostringstream t;
                t << "t,attacked,cla_reference,cla_updated,model\n";
                for (std::size_t k = 0; k < tr_ref.size(); ++k) {
                    const double cr = tr_ref[k].abnormality.cla, cu = tr_upd[k].abnormality.cla;
                    const bool att = replay.step_labels[k + 1];
                    t << k + 1 << ',' << int(att) << ',' << fmt(cr) << ',' << fmt(cu) << ',' << model[k] << '\n';
                    if (!att) {
                        ++n_clean;
                        ref_clean += model[k] == 0;
                        continue;
                    }
                    upd_attacked += model[k];
                    a.push_back(cr);
                    b.push_back(model[k] ? cu : cr);
                }
                const double ma = median(a), mb = median(b);
                points.push_back({{"snr_db", snr},
                                  {"jsr_db", jsr},
                                  {"seed", seed},
                                  {"eta", eta},
                                  {"attack_steps", steps.size()},
                                  {"u_jammer", to_vector(log.u_jammer)},
                                  {"median_reference", ma},
                                  {"median_switched", mb},
                                  {"ratio", ma / mb},
                                  {"updated_share_attacked", a.empty() ? 0.0 : double(upd_attacked) / a.size()},
                                  {"reference_share_clean", n_clean ? double(ref_clean) / n_clean : 0.0}});
                metrics << fmt(snr) << ',' << fmt(jsr) << ',' << seed << ',' << steps.size() << ',' << fmt(ma) << ','
                        << fmt(mb) << ',' << fmt(ma / mb) << '\n';
                res.artifacts.push_back({label + "/characterization.json", dump(characterization_to_json(log))});
                res.artifacts.push_back({label + "/vocab_updated.json", serialize_vocabulary(updated)});
                res.artifacts.push_back({label + "/replay.csv", t.str()});
            }
    std::vector<double> ratios;
    for (const auto& p : points)
        if (p.contains("ratio")) ratios.push_back(p["ratio"]);
    res.summary = {{"points", points}, {"median_ratio", ratios.empty() ? 0.0 : median(ratios)}};
    res.artifacts.push_back({"characterization.csv", metrics.str()});
    return res;
}

// ------------------------------------------------------------ classification

const std::vector<ModulationScheme>& bank_schemes() {
    static const std::vector<ModulationScheme> s{
        {Modulation::BPSK}, {Modulation::QPSK}, {Modulation::QAM16}, {Modulation::QAM64}};
    return s;
}

ExperimentResult run_classification(const ExperimentSpec& spec) {
    ExperimentResult res{spec.kind, {}, {}};
    ReferenceCache refs(spec);
    const int d = spec.scenario.n_subcarriers;
    const auto& schemes = bank_schemes();
    const int K = static_cast<int>(schemes.size());
    auto points = nlohmann::json::array();
    std::ostringstream acc_csv;
    acc_csv << "snr_db,jsr_db,L,seed,window_pcc,step_pcc\n";

    auto evidence = [&](const ReferenceModel& ref, double snr, double jsr, const ModulationScheme& js, std::uint64_t seed) {
        ExperimentSpec s = spec;
        s.scenario.jammer_scheme = js;
        const Scenario sc = jammed_scenario(s, snr, jsr, seed);
        Mmjpf f(ref.vocab, filter_options(spec, seed));
        const auto tr = f.run(build_generalized_observations(sc.grid));
        std::vector<Vec> ev;
        for (const auto& st : tr)
            if (st.abnormality.cla > ref.calibration.eta) ev.push_back(st.errors.eps_Z2);
        return ev;
    };

    for (double snr : spec.snr_db)
        for (double jsr : spec.jsr_db)
            for (int L : spec.L)
                for (auto seed : spec.seeds) {
                    const auto& ref = refs.get(snr, seed);
                    nlohmann::json pt{{"snr_db", snr}, {"jsr_db", jsr}, {"L", L}, {"seed", seed}};
                    ModelBank bank;
                    bool ok = true;
                    for (const auto& js : schemes) {
                        const auto ev = evidence(ref, snr, jsr, js, derived(seed, 500));
                        if (ev.size() < 10) {
                            ok = false;
                            break;
                        }
                        JammerModelOptions jo;
                        jo.n_nodes = L;
                        bank.models.push_back(learn_jammer_model(ev, d, js, jo));
                        bank.schemes.push_back(js);
                    }
                    if (!ok) {
                        pt["status"] = "insufficient_training_evidence";
                        pt["window_pcc"] = 0.0;
                        pt["step_pcc"] = 0.0;
                        points.push_back(pt);
                        acc_csv << fmt(snr) << ',' << fmt(jsr) << ',' << L << ',' << seed << ",0,0\n";
                        continue;
                    }
                    AjcOptions ao;
                    ao.n_particles = spec.n_particles;
                    ao.seed = derived(seed, 600);
                    Vec r(4);
                    r << ref.vocab.r_diag[0], ref.vocab.r_diag[d], ref.vocab.r_diag[2 * d], ref.vocab.r_diag[3 * d];
                    ao.r_diag = r;

                    std::vector<int> window_pred, window_truth, step_pred, step_truth;
                    auto classes = nlohmann::json::array();
                    for (int k = 0; k < K; ++k) {
                        const auto ev = evidence(ref, snr, jsr, schemes[static_cast<std::size_t>(k)], derived(seed, 600));
                        int label = -1;
                        std::vector<int> counts(static_cast<std::size_t>(K), 0);
                        if (ev.size() >= 2) {
                            const auto cr = classify_evidence(bank, ev, d, ao);
                            label = cr.window_label;
                            for (int x : cr.khat) {
                                step_pred.push_back(x);
                                step_truth.push_back(k);
                                ++counts[static_cast<std::size_t>(x)];
                            }
                        }
                        window_pred.push_back(label);
                        window_truth.push_back(k);
                        classes.push_back({{"truth", schemes[static_cast<std::size_t>(k)].name()},
                                           {"evidence", ev.size()},
                                           {"window_label", label},
                                           {"step_counts", counts}});
                    }
                    const double wp = p_cc(window_pred, window_truth);
                    const double sp = step_pred.empty() ? 0.0 : p_cc(step_pred, step_truth);
                    pt["classes"] = classes;
                    pt["window_pcc"] = wp;
                    pt["step_pcc"] = sp;
                    points.push_back(pt);
                    acc_csv << fmt(snr) << ',' << fmt(jsr) << ',' << L << ',' << seed << ',' << fmt(wp) << ',' << fmt(sp)
                            << '\n';
                    if (!step_pred.empty()) {
                        const auto cm = confusion(step_pred, step_truth, K);
                        std::ostringstream c;
                        c << "truth\\predicted";
                        for (const auto& s : schemes) c << ',' << s.name();
                        c << '\n';
                        for (int i = 0; i < K; ++i) {
                            c << schemes[static_cast<std::size_t>(i)].name();
                            for (int j = 0; j < K; ++j) c << ',' << cm(i, j);
                            c << '\n';
                        }
                        res.artifacts.push_back(
                            {point_label({{"snr", snr}, {"jsr", jsr}, {"L", L}}, seed) + "/confusion.csv", c.str()});
                    }
                }

    // Pooled over seeds: window decisions and per-step decisions.
    auto pooled = nlohmann::json::array();
    for (double snr : spec.snr_db)
        for (double jsr : spec.jsr_db)
            for (int L : spec.L) {
                std::vector<double> w, s;
                for (const auto& p : points)
                    if (p["snr_db"] == snr && p["jsr_db"] == jsr && p["L"] == L) {
                        w.push_back(p["window_pcc"]);
                        s.push_back(p["step_pcc"]);
                    }
                pooled.push_back({{"snr_db", snr}, {"jsr_db", jsr}, {"L", L}, {"window_pcc", mean(w)}, {"step_pcc", mean(s)}});
            }
    res.summary = {{"points", points}, {"pooled", pooled}};
    res.artifacts.push_back({"accuracy.csv", acc_csv.str()});
    return res;
}

// ---------------------------------------------------------------- transport

struct PlanBundle {
    TransportPlan plan;
    Vocabulary source;
    Vocabulary target;
};

PairedSamples pair_streams(const ConversionStreams& s, const Vocabulary& src, const Vocabulary& tgt, int gamma) {
    PairedSamples p;
    for (const auto& z : s.source_obs) p.source_states.push_back(z.head(2));
    for (std::size_t b = 0; b * static_cast<std::size_t>(gamma) < s.target_obs.size(); ++b)
        p.target_states.push_back(s.target_obs[b * static_cast<std::size_t>(gamma)].head(2));
    p.source_labels = nearest_state_labels(p.source_states, state_means(src));
    p.target_labels = nearest_state_labels(p.target_states, state_means(tgt));
    return p;
}

constexpr double kTransportTrainSnr = 20.0;

PlanBundle learn_plan(Modulation from, Modulation to, int n_target_symbols, std::uint64_t seed) {
    const ModulationScheme s{from}, t{to};
    const int gamma = retiming_factor(s.order(), t.order());
    GngConfig g;
    g.epochs = 20;
    const auto streams = make_conversion_streams(s, t, n_target_symbols, kTransportTrainSnr, false, seed);
    PlanBundle b;
    b.source = learn_stream_vocabulary(streams.source_obs, s.order(), s.name(), g);
    b.target = learn_stream_vocabulary(streams.target_obs, t.order(), t.name(), g);
    b.plan = transport_plan(b.source, b.target, pair_streams(streams, b.source, b.target, gamma), s.name(), t.name());
    return b;
}

ExperimentResult run_conversion(const ExperimentSpec& spec) {
    ExperimentResult res{spec.kind, {}, {}};
    const int scale = spec.quick ? 10 : 1;
    auto points = nlohmann::json::array();
    std::ostringstream ber_csv;
    ber_csv << "seed,pair,snr_db,ebn0_db,ber,analytic\n";
    for (auto seed : spec.seeds) {
        const auto bq = learn_plan(Modulation::BPSK, Modulation::QPSK, 3000 / scale, derived(seed, 11));
        const auto q16 = learn_plan(Modulation::QPSK, Modulation::QAM16, 3000 / scale, derived(seed, 12));
        const auto b64 = learn_plan(Modulation::BPSK, Modulation::QAM64, 6000 / scale, derived(seed, 13));
        const std::string label = "seed" + std::to_string(seed);
        res.artifacts.push_back({label + "/plan_BPSK_QPSK.json", dump(plan_to_json(bq.plan))});
        res.artifacts.push_back({label + "/plan_QPSK_16QAM.json", dump(plan_to_json(q16.plan))});
        res.artifacts.push_back({label + "/plan_BPSK_64QAM.json", dump(plan_to_json(b64.plan))});

        const ModulationScheme bpsk{Modulation::BPSK}, qpsk{Modulation::QPSK}, qam16{Modulation::QAM16};
        const auto clean = make_conversion_streams(bpsk, qpsk, 2000 / scale, 0.0, true, derived(seed, 99));
        const auto clean_out = convert_stream(bq.plan, qpsk, clean.source_obs);
        const double clean_ber = ber(clean_out.bits, clean.bits);

        nlohmann::json pt{{"seed", seed},
                          {"gamma_bpsk_qpsk", bq.plan.gamma},
                          {"gamma_bpsk_64qam", b64.plan.gamma},
                          {"gamma_qpsk_16qam", q16.plan.gamma},
                          {"noiseless_ber", clean_ber},
                          {"noiseless_bits", clean.bits.size()}};
        auto curves = nlohmann::json::array();
        for (double snr : spec.snr_db) {
            // The analytic curves are read at the Eb/N0 of the source stream.
            const auto s1 = make_conversion_streams(bpsk, qpsk, 100000 / scale, snr, false, derived(seed, 77));
            const double b1 = ber(convert_stream(bq.plan, qpsk, s1.source_obs).bits, s1.bits);
            const double a1 = ber_qpsk_analytic(db_to_linear(snr));
            const auto s2 = make_conversion_streams(qpsk, qam16, 50000 / scale, snr, false, derived(seed, 78));
            const double b2 = ber(convert_stream(q16.plan, qam16, s2.source_obs).bits, s2.bits);
            const double a2 = ber_qam16_analytic(db_to_linear(snr) / 2.0);
            curves.push_back({{"pair", "BPSK->QPSK"}, {"snr_db", snr}, {"ber", b1}, {"analytic", a1}, {"bits", s1.bits.size()}});
            curves.push_back({{"pair", "QPSK->16QAM"}, {"snr_db", snr}, {"ber", b2}, {"analytic", a2}, {"bits", s2.bits.size()}});
            ber_csv << seed << ",BPSK->QPSK," << fmt(snr) << ',' << fmt(snr) << ',' << fmt(b1) << ',' << fmt(a1) << '\n';
            ber_csv << seed << ",QPSK->16QAM," << fmt(snr) << ',' << fmt(snr - linear_to_db(2.0)) << ',' << fmt(b2) << ','
                    << fmt(a2) << '\n';
        }
        pt["curves"] = curves;
        points.push_back(pt);
    }
    res.summary = {{"points", points}};
    res.artifacts.push_back({"ber.csv", ber_csv.str()});
    return res;
}

ExperimentResult run_amc(const ExperimentSpec& spec) {
    ExperimentResult res{spec.kind, {}, {}};
    const int scale = spec.quick ? 4 : 1;
    const auto& schemes = bank_schemes();
    const std::vector<int> holds{1, 2, 4, 6};  // source steps per symbol carrying the same bits as BPSK
    auto points = nlohmann::json::array();
    std::ostringstream csv;
    csv << "seed,snr_db,truth,windows,accuracy\n";
    GngConfig g;
    g.epochs = 20;
    for (auto seed : spec.seeds) {
        const auto bq = learn_plan(Modulation::BPSK, Modulation::QPSK, 3000 / scale, derived(seed, 11));
        const auto b16 = learn_plan(Modulation::BPSK, Modulation::QAM16, 4000 / scale, derived(seed, 14));
        const auto b64 = learn_plan(Modulation::BPSK, Modulation::QAM64, 6000 / scale, derived(seed, 13));
        const std::vector<TransportPlan> plans{bq.plan, b16.plan, b64.plan};
        for (double snr : spec.snr_db) {
            const auto noise_model =
                learn_stream_vocabulary(make_held_stream({Modulation::BPSK}, 1, 3000 / scale, snr, derived(seed, 5)), 2,
                                        "BPSK", g);
            std::vector<int> pred, truth;
            auto per_class = nlohmann::json::array();
            for (std::size_t k = 0; k < schemes.size(); ++k) {
                const int hold = holds[k];
                const auto ev = make_held_stream(schemes[k], hold, 1200 / scale / hold, snr,
                                                 derived(seed, 100 + static_cast<std::uint64_t>(k)));
                const auto r = amc_classify(ev, bq.source, plans, noise_model.r_diag);
                int ok = 0;
                for (int x : r.khat) {
                    pred.push_back(x);
                    truth.push_back(static_cast<int>(k));
                    ok += x == static_cast<int>(k);
                }
                const double acc = r.khat.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(r.khat.size());
                per_class.push_back({{"truth", schemes[k].name()}, {"windows", r.khat.size()}, {"accuracy", acc}});
                csv << seed << ',' << fmt(snr) << ',' << schemes[k].name() << ',' << r.khat.size() << ',' << fmt(acc) << '\n';
            }
            points.push_back({{"seed", seed},
                              {"snr_db", snr},
                              {"classes", per_class},
                              {"accuracy", pred.empty() ? 0.0 : p_cc(pred, truth)}});
        }
    }
    res.summary = {{"points", points}};
    res.artifacts.push_back({"amc.csv", csv.str()});
    return res;
}

// ---------------------------------------------------------------- anti-jamming

ExperimentResult run_antijam(const ExperimentSpec& spec) {
    ExperimentResult res{spec.kind, {}, {}};
    ReferenceCache refs(spec);
    auto points = nlohmann::json::array();
    std::ostringstream csv;
    csv << "snr_db,jsr_db,bandwidth_mhz,seed,agent,cumulative_reward,collision_rate_final,spearman\n";
    for (double snr : spec.snr_db)
        for (double jsr : spec.jsr_db)
            for (double bw : spec.bandwidth_mhz)
                for (auto seed : spec.seeds) {
                    const auto& ref = refs.get(snr, seed);
                    EpisodeConfig ec = spec.episode;
                    ec.seed = derived(seed, 700);
                    ec.jammer.seed = derived(seed, 707);
                    ec.snr_db = snr;
                    ec.jsr_db = jsr;
                    ec.n_prbs = prbs_for_bandwidth(bw);
                    ec.d = spec.scenario.n_subcarriers;
                    ec.n_particles = spec.n_particles;
                    const std::string label = point_label({{"snr", snr}, {"jsr", jsr}, {"bw", bw}}, seed);
                    nlohmann::json pt{{"snr_db", snr}, {"jsr_db", jsr}, {"bandwidth_mhz", bw}, {"n_prbs", ec.n_prbs},
                                      {"seed", seed}, {"eta", ref.calibration.eta}};
                    const auto tail = static_cast<std::size_t>(std::min(500, std::max(1, ec.steps / 4)));
                    for (auto agent : {AgentKind::AIN, AgentKind::QL, AgentKind::FH}) {
                        const auto log = run_episode(ec, agent, ref.vocab, ref.calibration.eta);
                        const double cr = log.cumulative_reward.back();
                        const double coll = log.collision_rate(log.steps.size() - tail, log.steps.size());
                        const double rho = spearman(log.cumulative_reward, log.cumulative_abnormality);
                        pt[agent_name(agent)] = {{"cumulative_reward", cr},
                                                 {"collision_rate_final", coll},
                                                 {"collision_rate", log.collision_rate(0, log.steps.size())},
                                                 {"spearman", rho}};
                        csv << fmt(snr) << ',' << fmt(jsr) << ',' << fmt(bw) << ',' << seed << ',' << agent_name(agent)
                            << ',' << fmt(cr) << ',' << fmt(coll) << ',' << fmt(rho) << '\n';
                        std::ostringstream e;
                        write_episode_csv(e, log);
                        res.artifacts.push_back({label + "/episode_" + agent_name(agent) + ".csv", e.str()});
                    }
                    pt["final_window"] = tail;
                    points.push_back(pt);
                }
    res.summary = {{"points", points}};
    res.artifacts.push_back({"antijam.csv", csv.str()});
    return res;
}

// ------------------------------------------------------------ numeric kernels

// Composite Simpson weights on n (odd) equally spaced nodes.
Vec simpson_weights(int n, double h) {
    Vec w(n);
    for (int i = 0; i < n; ++i) w[i] = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    return w * (h / 3.0);
}

double log_density(const Gauss& g, const Eigen::LLT<Mat>& llt, const Vec& x) {
    const Vec dx = x - g.mean;
    const double k = static_cast<double>(g.mean.size());
    return -0.5 * (dx.dot(llt.solve(dx)) + detail::log_det(llt) + k * std::log(2.0 * M_PI));
}

// KL(p||q) and the Bhattacharyya coefficient by quadrature on a box that
// covers ten standard deviations of both densities.
std::pair<double, double> numeric_kl_bc(const Gauss& p, const Gauss& q, int nodes) {
    const auto dim = p.mean.size();
    const Eigen::LLT<Mat> lp(p.cov), lq(q.cov);
    Vec lo(dim), hi(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double sp = std::sqrt(p.cov(i, i)), sq = std::sqrt(q.cov(i, i));
        lo[i] = std::min(p.mean[i] - 10 * sp, q.mean[i] - 10 * sq);
        hi[i] = std::max(p.mean[i] + 10 * sp, q.mean[i] + 10 * sq);
    }
    std::vector<Vec> w(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i) w[static_cast<std::size_t>(i)] = simpson_weights(nodes, (hi[i] - lo[i]) / (nodes - 1));
    double kl = 0.0, bc = 0.0;
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    Vec x(dim);
    while (true) {
        double weight = 1.0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            const int j = idx[static_cast<std::size_t>(i)];
            x[i] = lo[i] + (hi[i] - lo[i]) * j / (nodes - 1);
            weight *= w[static_cast<std::size_t>(i)][j];
        }
        const double a = log_density(p, lp, x), b = log_density(q, lq, x);
        kl += weight * std::exp(a) * (a - b);
        bc += weight * std::exp(0.5 * (a + b));
        std::size_t i = 0;
        while (i < idx.size() && ++idx[i] == nodes) idx[i++] = 0;
        if (i == idx.size()) break;
    }
    return {kl, bc};
}

Gauss random_gaussian(int dim, Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.4, 2.0);
    Gauss g;
    g.mean = Vec::NullaryExpr(dim, [&] { return n01(rng); });
    if (dim == 1) {
        g.cov = Mat::Constant(1, 1, u(rng));
    } else {
        const Mat b = Mat::NullaryExpr(dim, dim, [&] { return 0.5 * n01(rng); });
        g.cov = b * b.transpose() + Mat::Identity(dim, dim) * u(rng);
    }
    return g;
}

// Straightforward Kalman filter for a single superstate: the state block
// moves by the superstate velocity, the derivative block is that velocity.
double kalman_oracle_gap(Rng& rng, int steps) {
    const int d = 2, n = 4 * d, half = 2 * d;
    std::normal_distribution<double> n01(0.0, 1.0);
    Superstate s;
    s.mean = Vec::NullaryExpr(n, [&] { return 0.1 * n01(rng); });
    const Mat b = Mat::NullaryExpr(n, n, [&] { return 0.1 * n01(rng); });
    s.cov = b * b.transpose() + 0.05 * Mat::Identity(n, n);
    s.count = 1;
    Vocabulary v;
    v.d = d;
    v.nodes = {s};
    v.pi = Mat::Ones(1, 1);
    v.pi_tau = {Mat::Ones(1, 1)};
    v.r_diag = Vec::Constant(n, 0.04);
    FilterOptions fo;
    fo.n_particles = 4;
    Mmjpf f(v, fo);

    Vec z = Vec::NullaryExpr(n, [&] { return n01(rng); });
    f.init(z);
    const Mat R = v.R();
    Vec x = z;
    Mat P = R;
    const Vec u = s.mean.tail(half);
    double gap = 0.0;
    for (int t = 0; t < steps; ++t) {
        z.head(half) += u + 0.2 * Vec::NullaryExpr(half, [&] { return n01(rng); });
        z.tail(half) = u + 0.2 * Vec::NullaryExpr(half, [&] { return n01(rng); });
        Vec xp(n);
        xp << x.head(half) + u, u;
        Mat Pp = s.cov;
        Pp.topLeftCorner(half, half) += P.topLeftCorner(half, half);
        const Mat K = Pp * (Pp + R).inverse();
        x = xp + K * (z - xp);
        P = (Mat::Identity(n, n) - K) * Pp;
        const auto out = f.step(z);
        gap = std::max(gap, (out.posterior_mean - x).cwiseAbs().maxCoeff());
        gap = std::max(gap, (*f.belief().particles.front().cov - P).cwiseAbs().maxCoeff());
    }
    return gap;
}

// Transition counts recomputed from scratch, one (i, j) pair at a time.
bool transition_counts_match(Rng& rng, int n_states, int length, int tau_max) {
    std::uniform_int_distribution<int> pick(0, n_states - 1), run(1, 6);
    std::vector<int> labels;
    while (static_cast<int>(labels.size()) < length) {
        const int s = pick(rng), r = run(rng);
        for (int k = 0; k < r; ++k) labels.push_back(s);
    }
    labels.resize(static_cast<std::size_t>(length));
    const auto tc = count_transitions({labels}, n_states, tau_max);
    const Mat est = estimate_transition_matrix(labels, n_states);
    for (int i = 0; i < n_states; ++i)
        for (int j = 0; j < n_states; ++j) {
            double c = 0.0;
            std::vector<double> ct(static_cast<std::size_t>(tau_max), 0.0);
            for (std::size_t t = 0; t + 1 < labels.size(); ++t) {
                if (labels[t] != i || labels[t + 1] != j) continue;
                c += 1.0;
                int dwell = 1;
                for (std::size_t b = t; b > 0 && labels[b - 1] == labels[t]; --b) ++dwell;
                ct[static_cast<std::size_t>(std::min(dwell, tau_max) - 1)] += 1.0;
            }
            if (tc.counts(i, j) != c) return false;
            for (int k = 0; k < tau_max; ++k)
                if (tc.tau_counts[static_cast<std::size_t>(k)](i, j) != ct[static_cast<std::size_t>(k)]) return false;
            double row = 0.0;
            for (std::size_t t = 0; t + 1 < labels.size(); ++t) row += labels[t] == i;
            const double expect = (c + kLaplaceEpsilon) / (row + n_states * kLaplaceEpsilon);
            if (std::abs(est(i, j) - expect) > 1e-15) return false;
        }
    return true;
}

ExperimentResult run_kernels(const ExperimentSpec& spec) {
    ExperimentResult res{spec.kind, {}, {}};
    auto points = nlohmann::json::array();
    std::ostringstream csv;
    csv << "seed,check,dim,value\n";
    const int fixtures = spec.quick ? 2 : 4;
    for (auto seed : spec.seeds) {
        auto rng = make_rng(seed, 9);
        double kl_err = 0.0, bc_err = 0.0;
        for (int dim : {1, 2})
            for (int f = 0; f < fixtures; ++f) {
                const Gauss p = random_gaussian(dim, rng), q = random_gaussian(dim, rng);
                const auto [kl, bc] = numeric_kl_bc(p, q, dim == 1 ? 4001 : (spec.quick ? 301 : 401));
                const double ek = std::abs(kl - gaussian_kld(p, q));
                const auto b = bhattacharyya(p, q);
                const double eb = std::max(std::abs(bc - b.coefficient), std::abs(-std::log(bc) - b.distance));
                kl_err = std::max(kl_err, ek);
                bc_err = std::max(bc_err, eb);
                csv << seed << ",kl_error," << dim << ',' << fmt(ek) << '\n';
                csv << seed << ",bhattacharyya_error," << dim << ',' << fmt(eb) << '\n';
            }
        const double kf = kalman_oracle_gap(rng, spec.quick ? 20 : 100);
        bool counts = true;
        for (int r = 0; r < (spec.quick ? 3 : 10); ++r) counts = counts && transition_counts_match(rng, 2 + r % 5, 400, 4);
        csv << seed << ",kalman_gap,8," << fmt(kf) << '\n';
        csv << seed << ",transition_counts_exact,0," << int(counts) << '\n';
        points.push_back({{"seed", seed},
                          {"kl_max_error", kl_err},
                          {"bhattacharyya_max_error", bc_err},
                          {"kalman_max_gap", kf},
                          {"transition_counts_exact", counts}});
    }
    res.summary = {{"points", points}};
    res.artifacts.push_back({"kernels.csv", csv.str()});
    return res;
}

// ---------------------------------------------------------------------- fuzz

struct FuzzTally {
    long checks = 0;
    long simplex_violations = 0;
    long pd_violations = 0;

    void simplex(const Vec& p) {
        ++checks;
        if (p.size() == 0 || p.minCoeff() < -1e-12 || std::abs(p.sum() - 1.0) > 1e-9) ++simplex_violations;
    }
    void rows(const Mat& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) simplex(m.row(i).transpose());
    }
    void pd(const Mat& c) {
        ++checks;
        Eigen::LLT<Mat> llt(c);
        if (llt.info() != Eigen::Success || !c.allFinite() || (c - c.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + c.cwiseAbs().maxCoeff()))
            ++pd_violations;
    }
};

ExperimentResult run_fuzz(const ExperimentSpec& spec) {
    ExperimentResult res{spec.kind, {}, {}};
    auto points = nlohmann::json::array();
    const int trials = spec.quick ? 2 : 6;
    for (auto seed : spec.seeds) {
        auto rng = make_rng(seed, 13);
        std::uniform_real_distribution<double> snr_d(0.0, 25.0), jsr_d(-5.0, 15.0);
        std::uniform_int_distribution<int> d_d(2, 5), nodes_d(2, 6), steps_d(80, 160);
        FuzzTally tally;
        for (int trial = 0; trial < trials; ++trial) {
            ScenarioConfig sc;
            sc.n_subcarriers = d_d(rng);
            sc.n_steps = steps_d(rng);
            sc.channel.snr_db = snr_d(rng);
            sc.channel.jsr_db = jsr_d(rng);
            sc.jammer.on_windows = {{sc.n_steps / 2, sc.n_steps}};
            sc.jammer.enabled = false;
            sc.seed = seed * 100 + static_cast<std::uint64_t>(trial);
            VocabularyOptions vo;
            vo.gng.max_nodes = nodes_d(rng);
            vo.gng.seed = sc.seed;
            vo.tau_max = 4;
            const auto vocab = learn_vocabulary({build_generalized_observations(synthesize_scenario(sc).grid)},
                                                sc.n_subcarriers, "FUZZ", vo);
            tally.rows(vocab.pi);
            for (const auto& s : vocab.pi_tau) tally.rows(s);
            for (const auto& n : vocab.nodes) {
                tally.pd(n.cov);
                for (const auto& [j, g] : n.conditional) tally.pd(g.cov);
            }

            sc.jammer.enabled = true;
            sc.seed += 50;
            const auto zs = build_generalized_observations(synthesize_scenario(sc).grid);
            FilterOptions fo;
            fo.n_particles = 20;
            fo.seed = sc.seed;
            fo.use_conditional = trial % 2 == 1;
            Mmjpf f(vocab, fo);
            f.init(zs.front());
            for (std::size_t t = 1; t < zs.size(); ++t) {
                const auto out = (t % 3 == 0) ? f.step_gated(zs[t], 50.0) : f.step(zs[t]);
                tally.simplex(out.pi_S);
                tally.simplex(out.lambda_S);
                tally.simplex(out.prev_occupancy);
                Vec w(static_cast<Eigen::Index>(f.belief().particles.size()));
                std::set<const Mat*> covs;
                for (std::size_t i = 0; i < f.belief().particles.size(); ++i) {
                    w[static_cast<Eigen::Index>(i)] = f.belief().particles[i].weight;
                    covs.insert(f.belief().particles[i].cov.get());
                }
                tally.simplex(w);
                for (const Mat* c : covs) tally.pd(*c);
                tally.pd(out.pi_X.cov);
            }

            // Belief updates of the anti-jamming agent under random evidence.
            auto beliefs = init_beliefs(sc.n_subcarriers, 3);
            int jrow = -1;
            std::uniform_int_distribution<int> prb(0, sc.n_subcarriers - 1), tau(1, 5);
            std::uniform_real_distribution<double> ups(0.0, 200.0), coin(0.0, 1.0);
            for (int k = 0; k < 200; ++k)
                update_beliefs(beliefs, {prb(rng), prb(rng), tau(rng), coin(rng) < 0.5, ups(rng), 40.0, 0.5}, jrow);
            for (const auto* stack : {&beliefs.P_u, &beliefs.P_j, &beliefs.Pi_a})
                for (const auto& m : *stack) tally.rows(m);
        }
        points.push_back({{"seed", seed},
                          {"checks", tally.checks},
                          {"simplex_violations", tally.simplex_violations},
                          {"pd_violations", tally.pd_violations}});
    }
    res.summary = {{"points", points}};
    return res;
}

ExperimentResult run_calibration(const ExperimentSpec& spec) {
    ExperimentResult res{spec.kind, {}, {}};
    ReferenceCache refs(spec);
    auto points = nlohmann::json::array();
    for (double snr : spec.snr_db)
        for (auto seed : spec.seeds) {
            const auto& ref = refs.get(snr, seed);
            const auto& c = ref.calibration;
            const std::string label = point_label({{"snr", snr}}, seed);
            nlohmann::json j{{"snr_db", snr},
                             {"seed", seed},
                             {"eta", c.eta},
                             {"cla_mean", c.cla_mean},
                             {"cla_std", c.cla_std},
                             {"klda_mean", c.klda_mean},
                             {"klda_std", c.klda_std},
                             {"dcla_thresholds", c.dcla_thresholds},
                             {"w_hat", to_vector(ref.w_hat)}};
            res.artifacts.push_back({label + "/vocab.json", serialize_vocabulary(ref.vocab)});
            res.artifacts.push_back({label + "/calibration.json", dump(j)});
            points.push_back(j);
        }
    res.summary = {{"points", points}};
    return res;
}

}  // namespace

std::string kind_name(ExperimentKind kind) {
    for (const auto& e : kKinds)
        if (e.kind == kind) return e.name;
    throw ConfigError("unknown experiment kind");
}

ExperimentKind kind_from_name(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (const auto& e : kKinds)
        if (up == e.name) return e.kind;
    throw ConfigError("unknown experiment kind '" + name + "'");
}

const std::vector<ExperimentKind>& measured_kinds() {
    static const std::vector<ExperimentKind> k{ExperimentKind::DETECT,   ExperimentKind::ROC,     ExperimentKind::SUPPRESS,
                                               ExperimentKind::CHARACTERIZE, ExperimentKind::CLASSIFY, ExperimentKind::CONVERT,
                                               ExperimentKind::AMC,      ExperimentKind::ANTIJAM, ExperimentKind::KERNELS,
                                               ExperimentKind::FUZZ};
    return k;
}

int prbs_for_bandwidth(double mhz) {
    static const std::pair<double, int> table[] = {{1.4, 6}, {3, 15}, {5, 25}, {10, 50}, {15, 75}, {20, 100}};
    for (const auto& [bw, n] : table)
        if (std::abs(bw - mhz) < 1e-9) return n;
    throw ConfigError("bandwidth must be one of 1.4, 3, 5, 10, 15, 20 MHz");
}

void ExperimentSpec::validate() const {
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (snr_db.empty()) throw ConfigError("snr_db sweep axis is empty");
    if (jsr_db.empty()) throw ConfigError("jsr_db sweep axis is empty");
    if (L.empty()) throw ConfigError("L sweep axis is empty");
    if (bandwidth_mhz.empty()) throw ConfigError("bandwidth sweep axis is empty");
    for (int l : L)
        if (l < 1) throw ConfigError("L must be >= 1");
    for (double b : bandwidth_mhz) prbs_for_bandwidth(b);
    for (double x : snr_db)
        if (!std::isfinite(x)) throw ConfigError("SNR values must be finite");
    for (double x : jsr_db)
        if (!std::isfinite(x)) throw ConfigError("JSR values must be finite");
    if (vocab_nodes < 1) throw ConfigError("vocab_nodes must be >= 1");
    if (n_particles < 1) throw ConfigError("n_particles must be >= 1");
    ScenarioConfig sc = with_default_window(scenario);
    sc.validate();
    if (kind == ExperimentKind::ANTIJAM) {
        EpisodeConfig ec = episode;
        ec.n_prbs = prbs_for_bandwidth(bandwidth_mhz.front());
        ec.validate();
    }
}

ExperimentSpec default_spec(ExperimentKind kind, bool quick) {
    ExperimentSpec s;
    s.kind = kind;
    s.quick = quick;
    s.snr_db = {15.0};
    s.jsr_db = {6.0};
    s.L = {4};
    s.bandwidth_mhz = {1.4};
    s.scenario.jammer.on_windows = {{300, 600}};
    switch (kind) {
        case ExperimentKind::ROC: s.jsr_db = {-5.0, 0.0, 6.0}; break;
        case ExperimentKind::SUPPRESS: s.jsr_db = {-5.0, 0.0, 5.0, 6.0, 10.0, 15.0}; break;
        case ExperimentKind::CHARACTERIZE:
            s.scenario.jammer.waveform = JammerWaveform::DRIFT;
            s.scenario.jammer.drift_per_step = {0.5, 0.5};
            s.scenario.jammer.on_windows = {{100, 160}, {300, 360}, {480, 540}};
            break;
        case ExperimentKind::CLASSIFY: s.snr_db = {16.0}; break;
        case ExperimentKind::CONVERT: s.snr_db = {8.0, 16.0}; break;
        case ExperimentKind::AMC: s.snr_db = {8.0, 12.0, 16.0}; break;
        default: break;
    }
    if (quick) {
        s.seeds = {1};
        s.n_particles = 20;
        s.scenario.n_steps = 160;
        s.scenario.jammer.on_windows = {{80, 160}};
        if (kind == ExperimentKind::CHARACTERIZE) s.scenario.jammer.on_windows = {{40, 70}, {110, 140}};
        if (kind == ExperimentKind::ROC || kind == ExperimentKind::SUPPRESS) s.jsr_db = {0.0, 6.0};
        if (kind == ExperimentKind::AMC || kind == ExperimentKind::CONVERT) s.snr_db = {16.0};
        s.episode.steps = 200;
    }
    return s;
}

ReferenceModel build_reference(const ScenarioConfig& base, std::uint64_t train_seed, std::uint64_t calibration_seed,
                               int vocab_nodes, int n_particles) {
    ScenarioConfig sc = base;
    sc.jammer.enabled = false;
    sc.seed = train_seed;
    VocabularyOptions vo;
    vo.gng.max_nodes = vocab_nodes;
    ReferenceModel ref;
    ref.vocab = learn_vocabulary({build_generalized_observations(synthesize_scenario(sc).grid)}, sc.n_subcarriers,
                                 "REFERENCE", vo);
    sc.seed = calibration_seed;
    FilterOptions fo;
    fo.n_particles = n_particles;
    fo.seed = calibration_seed;
    Mmjpf f(ref.vocab, fo);
    const auto trace = f.run(build_generalized_observations(synthesize_scenario(sc).grid));
    std::vector<double> cla, kl;
    std::vector<Vec> dc;
    ref.w_hat = Vec::Zero(4 * sc.n_subcarriers);
    for (const auto& s : trace) {
        cla.push_back(s.abnormality.cla);
        kl.push_back(s.abnormality.klda);
        dc.push_back(s.abnormality.dcla);
        ref.w_hat += s.errors.eps_Z2;
    }
    if (trace.empty()) throw EmptyInputError("calibration run is empty");
    ref.w_hat /= static_cast<double>(trace.size());
    ref.calibration = calibrate_thresholds(cla, dc, kl);
    return ref;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case ExperimentKind::DETECT:
        case ExperimentKind::ROC: return run_detection(spec);
        case ExperimentKind::SUPPRESS: return run_suppression(spec);
        case ExperimentKind::CHARACTERIZE: return run_characterization(spec);
        case ExperimentKind::CLASSIFY: return run_classification(spec);
        case ExperimentKind::CONVERT: return run_conversion(spec);
        case ExperimentKind::AMC: return run_amc(spec);
        case ExperimentKind::ANTIJAM: return run_antijam(spec);
        case ExperimentKind::KERNELS: return run_kernels(spec);
        case ExperimentKind::FUZZ: return run_fuzz(spec);
        case ExperimentKind::CALIBRATE: return run_calibration(spec);
    }
    throw ConfigError("unknown experiment kind");
}

}  // namespace jamaware
