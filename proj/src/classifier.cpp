#include "jamaware/classifier.hpp"

#include <set>

namespace jamaware {

void ModelBank::validate() const {
    if (models.empty()) throw EmptyInputError("model bank is empty");
    if (models.size() != schemes.size()) throw ConfigError("model bank needs one scheme per model");
    std::set<std::string> names;
    for (const auto& s : schemes)
        if (!names.insert(s.name()).second) throw ConfigError("duplicate scheme in model bank: " + s.name());
    for (const auto& m : models) {
        m.validate();
        if (m.d != models.front().d) throw ConfigError("bank models differ in sub-carrier count");
    }
}

Vec cell_block(const Vec& z, int n, int d) {
    if (z.size() != 4 * d) throw LengthMismatchError("observation length differs from 4d");
    if (n < 0 || n >= d) throw std::out_of_range("sub-carrier index");
    Vec out(4);
    for (int b = 0; b < 4; ++b) out[b] = z[b * d + n];
    return out;
}

std::vector<std::vector<Vec>> split_cells(const std::vector<Vec>& zs, int d) {
    std::vector<std::vector<Vec>> out(static_cast<std::size_t>(d));
    for (auto& seq : out) seq.reserve(zs.size());
    for (const auto& z : zs)
        for (int n = 0; n < d; ++n) out[static_cast<std::size_t>(n)].push_back(cell_block(z, n, d));
    return out;
}

Vocabulary learn_jammer_model(const std::vector<Vec>& evidence, int d, const ModulationScheme& scheme,
                              const JammerModelOptions& opts) {
    if (evidence.size() < 2) throw EmptyInputError("jammer model needs at least two evidence vectors");
    VocabularyOptions vo;
    vo.gng = opts.gng;
    vo.gng.max_nodes = opts.n_nodes;
    vo.tau_max = opts.tau_max;
    vo.bootstrap_with_ukf = false;
    vo.conditional = true;
    return learn_vocabulary(split_cells(evidence, d), 1, "JAMMER(" + scheme.name() + ")", vo);
}

AjcBank::AjcBank(const ModelBank& bank, int d, AjcOptions opts) : d_(d) {
    bank.validate();
    if (bank.models.front().d != 1) throw ConfigError("jammer models are single-cell vocabularies");
    for (int k = 0; k < bank.size(); ++k) {
        std::vector<Mmjpf> cells;
        for (int n = 0; n < d; ++n) {
            FilterOptions fo;
            fo.n_particles = opts.n_particles;
            fo.use_conditional = true;
            fo.seed = opts.seed * 1000003ULL + static_cast<std::uint64_t>(k) * 1009ULL + static_cast<std::uint64_t>(n);
            fo.r_diag = opts.r_diag;
            cells.emplace_back(bank.models[static_cast<std::size_t>(k)], fo);
        }
        filters_.push_back(std::move(cells));
    }
}

std::optional<AjcDecision> AjcBank::step(const Vec& evidence) {
    if (!filters_.front().front().initialised()) {
        for (auto& cells : filters_)
            for (int n = 0; n < d_; ++n) cells[static_cast<std::size_t>(n)].init(cell_block(evidence, n, d_));
        return std::nullopt;
    }
    AjcDecision out;
    out.omega = Vec::Zero(size());
    for (int k = 0; k < size(); ++k)
        for (int n = 0; n < d_; ++n)
            out.omega[k] += filters_[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)]
                                .step(cell_block(evidence, n, d_))
                                .abnormality.cla;
    Eigen::Index best = 0;
    out.omega.minCoeff(&best);  // first minimum, i.e. the lowest index on ties
    out.khat = static_cast<int>(best);
    return out;
}

int majority_label(const std::vector<int>& labels, int n_classes) {
    if (labels.empty()) throw EmptyInputError("majority of an empty label set");
    std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
    for (int l : labels) ++counts.at(static_cast<std::size_t>(l));
    int best = 0;
    for (int k = 1; k < n_classes; ++k)
        if (counts[static_cast<std::size_t>(k)] > counts[static_cast<std::size_t>(best)]) best = k;
    return best;
}

ClassificationResult classify_evidence(const ModelBank& bank, const std::vector<Vec>& evidence, int d,
                                       const AjcOptions& opts) {
    AjcBank ajc(bank, d, opts);
    ClassificationResult out;
    for (const auto& e : evidence)
        if (auto dec = ajc.step(e)) {
            out.omega.push_back(dec->omega);
            out.khat.push_back(dec->khat);
        }
    if (out.khat.empty()) throw EmptyInputError("classification needs at least two evidence vectors");
    out.window_label = majority_label(out.khat, bank.size());
    return out;
}

}  // namespace jamaware
