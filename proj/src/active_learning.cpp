#include "topoforge/active_learning.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>

#include "topoforge/kkt_oracle.hpp"
#include "topoforge/rng.hpp"
#include "topoforge/threads.hpp"
#include "topoforge/topopt_solver.hpp"

namespace topoforge {

namespace {

bool same_setting(const ProblemSetting& a, const ProblemSetting& b) {
    return a.kind == b.kind && a.node == b.node && a.angle == b.angle;
}

}  // namespace

bool Dataset::contains(const ProblemSetting& setting) const {
    for (const DataRecord& rec : records)
        if (same_setting(rec.setting, setting)) return true;
    return false;
}

void Dataset::add(DataRecord record) {
    if (contains(record.setting)) throw std::logic_error("dataset: duplicate setting");
    records.push_back(std::move(record));
}

ComplianceSurrogate::ComplianceSurrogate(CaseKind kind, int degree, const Mesh& mesh)
    : kind_(kind), degree_(degree), mesh_(&mesh) {
    if (degree < 0) throw std::invalid_argument("surrogate: negative degree");
}

int ComplianceSurrogate::n_features() const {
    if (kind_ == CaseKind::TipAngle) return degree_ + 1;
    int n = 0;  // monomials u^a v^b w^c with a+b+c <= degree
    for (int a = 0; a <= degree_; ++a)
        for (int b = 0; a + b <= degree_; ++b) n += degree_ - a - b + 1;
    return n;
}

Eigen::VectorXd ComplianceSurrogate::features(const ProblemSetting& setting) const {
    if (kind_ == CaseKind::TipAngle) {
        Eigen::VectorXd phi(degree_ + 1);
        phi[0] = 1.0;
        for (int k = 1; k <= degree_; ++k) phi[k] = phi[k - 1] * setting.angle;
        return phi;
    }
    const Eigen::VectorXd enc = setting.encode(*mesh_);
    Eigen::VectorXd phi(n_features());
    int at = 0;
    for (int a = 0; a <= degree_; ++a)
        for (int b = 0; a + b <= degree_; ++b)
            for (int c = 0; a + b + c <= degree_; ++c)
                phi[at++] = std::pow(enc[0], a) * std::pow(enc[1], b) * std::pow(enc[2], c);
    return phi;
}

void ComplianceSurrogate::fit(const std::vector<DataRecord>& records) {
    if (records.empty()) throw std::invalid_argument("surrogate: empty fit set");
    Eigen::MatrixXd a(records.size(), n_features());
    Eigen::VectorXd y(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        a.row(i) = features(records[i].setting).transpose();
        y[static_cast<int>(i)] = records[i].f;
    }
    coef_ = a.colPivHouseholderQr().solve(y);
}

double ComplianceSurrogate::predict(const ProblemSetting& setting) const {
    if (coef_.size() == 0) throw std::logic_error("surrogate: predict before fit");
    return features(setting).dot(coef_);
}

std::vector<ProblemSetting> draw_settings(CaseKind kind, const Mesh& mesh,
                                          const LoadRegion& region, std::uint64_t seed,
                                          const char* tag, int n) {
    Rng rng(sub_seed(seed, tag));
    std::vector<ProblemSetting> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(sample_setting(kind, mesh, region, rng));
    return out;
}

SolveOracle direct_oracle(EvalContext& ctx, const ExperimentConfig& config) {
    const ALParams solver = config.solver;
    return [&ctx, solver](const ProblemSetting& setting, Provenance provenance) {
        BudgetLedger ledger;
        SolveResult r = solve_to(ctx, setting, solver, ledger);
        return DataRecord{setting,  std::move(r.x),  r.f, std::move(r.sensitivity),
                          r.fea_count, provenance};
    };
}

RunResult run_strategy(EvalContext& ctx, const ExperimentConfig& config, Strategy strategy,
                       std::uint64_t seed, const SolveOracle& oracle, HistoryWriter* history) {
    config.validate();
    const Mesh& mesh = ctx.mesh();
    const LoadRegion region = config.region(mesh);

    // every strategy under one master seed draws the same sample sets
    auto draw = [&](const char* tag, int n) {
        return draw_settings(config.case_kind, mesh, region, seed, tag, n);
    };
    const std::vector<ProblemSetting> s_static = draw("static", config.n_static);
    const std::vector<ProblemSetting> s0 = draw("s0", config.n_initial);
    std::vector<ProblemSetting> sv = draw("sv", config.n_validation);
    const std::vector<ProblemSetting> st = draw("st", config.n_test);
    Rng rng_sub(sub_seed(seed, "subsample"));

    RunResult res;

    // the static set calibrates the budget rule for everyone
    std::vector<DataRecord> static_records;
    static_records.reserve(s_static.size());
    std::int64_t b_min = std::numeric_limits<std::int64_t>::max(), b_max = 0;
    for (const ProblemSetting& s : s_static) {
        DataRecord rec = oracle(s, Provenance::Static);
        b_min = std::min(b_min, rec.cost);
        b_max = std::max(b_max, rec.cost);
        res.static_cost += rec.cost;
        static_records.push_back(std::move(rec));
    }
    res.b0 = static_cast<double>(b_min) * config.n_static;
    res.b_floor = static_cast<double>(b_max);

    Architecture arch;
    arch.layers.push_back(ProblemSetting::input_dim(config.case_kind));
    arch.layers.insert(arch.layers.end(), config.hidden.begin(), config.hidden.end());
    arch.layers.push_back(mesh.n_elements());
    const GeneratorParams theta0 = init_generator(arch, sub_seed(seed, "init"));
    TrainConfig trainer = config.trainer;
    trainer.seed = sub_seed(seed, "train");

    // training samples mirror the dataset; weights are built once per record
    std::vector<TrainSample> samples;
    auto add_record = [&](DataRecord rec) {
        TrainSample sample;
        sample.input = rec.setting.encode(mesh);
        sample.target = rec.x;
        if (config.weighted_loss) {
            bool degenerate = false;
            sample.lambda = sensitivity_weights(rec.grad_f, &degenerate);
            if (degenerate) ++res.degenerate_weights;
        }
        samples.push_back(std::move(sample));
        res.dataset.add(std::move(rec));
    };
    auto train_now = [&] { return train(theta0, samples, trainer).params; };

    // generalization measure: true compliance of generated designs over the
    // test set; instrumentation, so it runs on a throwaway ledger
    auto test_metric = [&](const GeneratorParams& model) {
        BudgetLedger meter;
        double sum = 0.0;
        for (const ProblemSetting& s : st) {
            const Eigen::VectorXd x = forward(model, s.encode(mesh));
            sum += eval_design(ctx, x, realize_load(s, mesh), ctx.beta_target(), meter,
                               SolveKind::Scoring)
                       .f;
        }
        return sum;
    };

    if (strategy == Strategy::Static) {
        for (DataRecord& rec : static_records) add_record(std::move(rec));
        res.model = train_now();
        res.final_test_metric = test_metric(res.model);
        if (res.degenerate_weights > 0)
            std::fprintf(stderr,
                         "warning: %d sample(s) with constant sensitivity, identity weights\n",
                         res.degenerate_weights);
        return res;
    }

    for (const ProblemSetting& s : s0) add_record(oracle(s, Provenance::Initial));

    ComplianceSurrogate surrogate(config.case_kind, config.surrogate_degree, mesh);
    double budget = res.b0;
    res.budget_warning = budget <= res.b_floor;
    GeneratorParams model = theta0;
    bool trained = false;
    int iteration = 0;

    while (budget > res.b_floor && !sv.empty()) {
        model = train_now();
        trained = true;
        if (strategy == Strategy::Heuristic) surrogate.fit(res.dataset.records);

        // candidate pool for this iteration, ascending so equal scores pick
        // the lowest index
        std::vector<std::size_t> picked;
        const bool subsampled = config.validation_subsample > 0;
        if (subsampled && static_cast<std::size_t>(config.validation_subsample) < sv.size()) {
            picked = rng_sub.sample_indices(sv.size(),
                                            static_cast<std::size_t>(config.validation_subsample));
            std::sort(picked.begin(), picked.end());
        } else {
            picked.resize(sv.size());
            std::iota(picked.begin(), picked.end(), std::size_t{0});
        }

        BudgetLedger meter;
        std::vector<double> scores(picked.size());
        parallel_for_indexed(picked.size(), [&](std::size_t i, unsigned worker) {
            const ProblemSetting& s = sv[picked[i]];
            const Eigen::VectorXd x = forward(model, s.encode(mesh));
            if (strategy == Strategy::Theory) {
                scores[i] = deviation(ctx, s, x, config.kkt, meter, worker).d;
            } else {
                const DesignState state =
                    eval_design(ctx, x, realize_load(s, mesh), ctx.beta_target(), meter,
                                SolveKind::Scoring, worker);
                scores[i] = std::abs(state.f - surrogate.predict(s));
            }
        });
        double best_score = -std::numeric_limits<double>::infinity();
        std::size_t best_idx = picked.front();
        for (std::size_t i = 0; i < picked.size(); ++i) {
            if (scores[i] > best_score) {
                best_score = scores[i];
                best_idx = picked[i];
            }
        }
        const std::int64_t scoring = static_cast<std::int64_t>(picked.size());
        res.scoring_solves += scoring;

        DataRecord acquired = oracle(sv[best_idx], Provenance::Acquired);
        const ProblemSetting chosen = acquired.setting;
        const std::int64_t delta = acquired.cost + (config.charge_scoring ? scoring : 0);
        budget -= static_cast<double>(delta);
        add_record(std::move(acquired));

        if (subsampled) {
            for (auto it = picked.rbegin(); it != picked.rend(); ++it)
                sv.erase(sv.begin() + static_cast<std::ptrdiff_t>(*it));
        } else {
            sv.erase(sv.begin() + static_cast<std::ptrdiff_t>(best_idx));
        }

        ++iteration;
        AcquisitionRow row{iteration, budget, chosen, best_score, test_metric(model), delta};
        if (history)
            history->append(row.iteration, row.remaining, chosen.raw(mesh), row.score,
                            row.test_metric);
        res.history.push_back(std::move(row));
    }

    if (!trained) model = train_now();  // no acquisition fit in the budget
    res.model = std::move(model);
    res.final_test_metric =
        res.history.empty() ? test_metric(res.model) : res.history.back().test_metric;
    res.remaining = budget;
    if (res.degenerate_weights > 0)
        std::fprintf(stderr,
                     "warning: %d sample(s) with constant sensitivity, identity weights\n",
                     res.degenerate_weights);
    return res;
}

}  // namespace topoforge
