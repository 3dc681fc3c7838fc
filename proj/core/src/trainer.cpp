#include "specedge/trainer.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace specedge {

void OptState::reset(const Model& model) {
    step = 0;
    m1.clear();
    m2.clear();
    for (const auto& [name, t] : model.params()) {
        m1.emplace(name, Tensor(t.shape()));
        m2.emplace(name, Tensor(t.shape()));
    }
}

StepRecord adamw_step(Model& model, const std::map<std::string, Tensor>& grads, OptState& opt) {
    if (opt.m1.empty()) opt.reset(model);
    opt.step += 1;
    const OptConfig& c = opt.cfg;
    const double warm = c.warmup_steps > 0
                            ? std::min(1.0, static_cast<double>(opt.step) / c.warmup_steps)
                            : 1.0;
    const double lr = c.lr * warm;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(opt.step));

    StepRecord rec;
    rec.step = opt.step;
    rec.dgrad_attn.resize(static_cast<std::size_t>(model.attention_dim()));
    rec.dwd_attn.resize(static_cast<std::size_t>(model.attention_dim()));

    std::map<std::string, std::size_t> view_offset;
    {
        std::size_t off = 0;
        for (const auto& name : model.attention_param_names()) {
            view_offset[name] = off;
            off += static_cast<std::size_t>(model.params().at(name).size());
        }
    }

    double norm_sq = 0.0;
    for (auto& [name, theta] : model.params()) {
        const auto git = grads.find(name);
        if (git == grads.end()) throw std::invalid_argument("adamw_step: missing grad for " + name);
        const Tensor& g = git->second;
        if (!g.same_shape(theta)) throw std::invalid_argument("adamw_step: grad shape mismatch for " + name);
        for (const double gv : g.vec())
            if (!std::isfinite(gv)) throw TrainingDiverged("non-finite gradient in " + name);

        Tensor& m1 = opt.m1.at(name);
        Tensor& m2 = opt.m2.at(name);
        const bool decayed = theta.rank() >= 2;
        const double omega = decayed ? c.omega : 0.0;
        const auto vo = view_offset.find(name);
        double* rec_grad = vo == view_offset.end() ? nullptr : rec.dgrad_attn.data() + vo->second;
        double* rec_wd = vo == view_offset.end() ? nullptr : rec.dwd_attn.data() + vo->second;

        for (std::int64_t i = 0; i < theta.size(); ++i) {
            const double gv = g[i];
            m1[i] = c.beta1 * m1[i] + (1.0 - c.beta1) * gv;
            m2[i] = c.beta2 * m2[i] + (1.0 - c.beta2) * gv * gv;
            const double mhat = m1[i] / bc1;
            const double vhat = m2[i] / bc2;
            const double d_grad = -lr * mhat / (std::sqrt(vhat) + c.eps);
            const double d_wd = -lr * omega * theta[i];
            if (rec_grad) {
                rec_grad[i] = d_grad;
                rec_wd[i] = d_wd;
            }
            theta[i] += d_grad + d_wd;
            norm_sq += theta[i] * theta[i];
        }
    }
    rec.theta_norm = std::sqrt(norm_sq);
    return rec;
}

std::optional<long> detect_grok(const std::vector<MetricsRow>& log, const GrokCriterion& crit) {
    std::optional<long> train_ready_step;
    for (const auto& row : log) {
        if (row.train_acc >= crit.train_acc) {
            train_ready_step = row.step;
            break;
        }
    }
    if (!train_ready_step) return std::nullopt;

    std::vector<const MetricsRow*> evals;
    for (const auto& row : log)
        if (row.has_eval) evals.push_back(&row);

    for (std::size_t i = 0; i < evals.size(); ++i) {
        if (evals[i]->test_acc < crit.test_acc) continue;
        if (evals[i]->step < *train_ready_step + crit.train_lead_steps) continue;
        if (i + static_cast<std::size_t>(crit.sustain_evals) >= evals.size())
            return std::nullopt; // too near the end of the log to confirm
        bool sustained = true;
        for (int k = 1; k <= crit.sustain_evals && sustained; ++k)
            sustained = evals[i + static_cast<std::size_t>(k)]->test_acc >= crit.test_acc;
        if (sustained) return evals[i]->step;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

namespace {

PhaseCheckpoint nearest_checkpoint(const PhaseCheckpoints& phases, long target) {
    if (phases.periodic.empty()) return phases.init;
    long best = phases.periodic.begin()->first;
    for (const auto& [step, params] : phases.periodic)
        if (std::labs(step - target) < std::labs(best - target)) best = step;
    return {best, phases.periodic.at(best)};
}

} // namespace

template <typename Batch>
TrainResult Trainer::run(const std::vector<Batch>& train_batches, const std::vector<Batch>& eval_chunks,
                         const StepHook& on_step) {
    if (train_batches.empty()) throw std::invalid_argument("train: no training batches");
    TrainResult result;
    result.phases.init = {0, model_.params()};

    OptState opt;
    opt.cfg = cfg_.opt;
    opt.reset(model_);

    std::vector<GraphBundle> bundles;
    bundles.reserve(train_batches.size());
    for (const auto& b : train_batches) bundles.push_back(model_.build_graph(b, false));

    std::optional<PhaseCheckpoint> grok_candidate;
    std::optional<long> train_ready_step;

    for (long step = 1; step <= cfg_.max_steps; ++step) {
        const std::size_t bi = static_cast<std::size_t>((step - 1) % static_cast<long>(train_batches.size()));
        GraphBundle& bundle = bundles[bi];
        const Batch& batch = train_batches[bi];
        model_.sync_params(bundle);

        std::map<std::string, Tensor> grads;
        double train_loss = 0.0, train_acc = 0.0;
        try {
            bundle.g.forward({});
            train_loss = bundle.g.value(bundle.loss).item();
            train_acc = position_accuracy(bundle.g.value(bundle.logits), batch.targets, batch.weights);
            grads = bundle.g.backward(bundle.loss);
        } catch (const NumericalError& e) {
            throw TrainingDiverged("diverged at step " + std::to_string(step) + ": " + e.what());
        }

        StepRecord rec = adamw_step(model_, grads, opt);
        rec.train_loss = train_loss;
        rec.train_acc = train_acc;

        MetricsRow row;
        row.step = step;
        row.train_loss = train_loss;
        row.train_acc = train_acc;
        row.theta_norm = rec.theta_norm;
        if (!train_ready_step && train_acc >= cfg_.grok.train_acc) train_ready_step = step;

        if (step % cfg_.eval_interval == 0 || step == cfg_.max_steps) {
            const EvalMetrics em = evaluate_chunks(model_, eval_chunks);
            row.has_eval = rec.has_eval = true;
            row.test_loss = rec.test_loss = em.loss;
            row.test_acc = rec.test_acc = em.accuracy;

            // keep the params of the first qualifying crossing; a later dip
            // below threshold discards them (sustain rule)
            if (grok_candidate && row.test_acc < cfg_.grok.test_acc) grok_candidate.reset();
            if (!grok_candidate && row.test_acc >= cfg_.grok.test_acc && train_ready_step &&
                step >= *train_ready_step + cfg_.grok.train_lead_steps)
                grok_candidate = PhaseCheckpoint{step, model_.params()};
        }
        result.log.push_back(row);
        if (on_step) on_step(rec);

        if (cfg_.checkpoint_interval > 0 && step % cfg_.checkpoint_interval == 0)
            result.phases.periodic.emplace(step, model_.params());
    }

    result.steps_run = cfg_.max_steps;
    result.phases.late = {cfg_.max_steps, model_.params()};
    result.grok_step = detect_grok(result.log, cfg_.grok);
    if (result.grok_step) {
        if (grok_candidate && grok_candidate->step == *result.grok_step)
            result.phases.grok = std::move(grok_candidate);
        else
            result.phases.grok = nearest_checkpoint(result.phases, *result.grok_step);
        result.phases.pre_grok = nearest_checkpoint(result.phases, *result.grok_step / 2);
    } else {
        result.phases.pre_grok = nearest_checkpoint(result.phases, cfg_.max_steps / 2);
    }
    return result;
}

TrainResult Trainer::train(const TokenBatch& train_batch, const std::vector<TokenBatch>& eval_chunks,
                           const StepHook& on_step) {
    return run(std::vector<TokenBatch>{train_batch}, eval_chunks, on_step);
}

TrainResult Trainer::train(const std::vector<SeqBatch>& train_batches,
                           const std::vector<SeqBatch>& eval_chunks, const StepHook& on_step) {
    return run(train_batches, eval_chunks, on_step);
}

// ---------------------------------------------------------------------------
// chunking
// ---------------------------------------------------------------------------

std::vector<TokenBatch> chunk_dyck(const std::vector<DyckExample>& xs, int chunk) {
    std::vector<TokenBatch> out;
    for (std::size_t i = 0; i < xs.size(); i += static_cast<std::size_t>(chunk)) {
        const std::size_t hi = std::min(xs.size(), i + static_cast<std::size_t>(chunk));
        out.push_back(make_dyck_batch({xs.begin() + static_cast<std::ptrdiff_t>(i),
                                       xs.begin() + static_cast<std::ptrdiff_t>(hi)}));
    }
    return out;
}

std::vector<TokenBatch> chunk_modadd(const std::vector<ModAddExample>& xs, int p, int chunk) {
    std::vector<TokenBatch> out;
    for (std::size_t i = 0; i < xs.size(); i += static_cast<std::size_t>(chunk)) {
        const std::size_t hi = std::min(xs.size(), i + static_cast<std::size_t>(chunk));
        out.push_back(make_modadd_batch({xs.begin() + static_cast<std::ptrdiff_t>(i),
                                         xs.begin() + static_cast<std::ptrdiff_t>(hi)},
                                        p));
    }
    return out;
}

std::vector<SeqBatch> chunk_scan(const std::vector<ScanExample>& xs, int Tc, int Ta, int chunk) {
    std::vector<SeqBatch> out;
    for (std::size_t i = 0; i < xs.size(); i += static_cast<std::size_t>(chunk)) {
        const std::size_t hi = std::min(xs.size(), i + static_cast<std::size_t>(chunk));
        out.push_back(make_scan_batch({xs.begin() + static_cast<std::ptrdiff_t>(i),
                                       xs.begin() + static_cast<std::ptrdiff_t>(hi)},
                                      Tc, Ta));
    }
    return out;
}

TrainResult continue_from(Model& model, const std::map<std::string, Tensor>& checkpoint_params,
                          TrainConfig cfg, const TokenBatch& train_batch,
                          const std::vector<TokenBatch>& eval_chunks, const Trainer::StepHook& on_step) {
    if (checkpoint_params.size() != model.params().size())
        throw std::invalid_argument("continue_from: checkpoint does not match model config");
    for (const auto& [name, t] : checkpoint_params) {
        auto it = model.params().find(name);
        if (it == model.params().end() || !it->second.same_shape(t))
            throw std::invalid_argument("continue_from: checkpoint does not match model config (param " +
                                        name + ")");
    }
    model.params() = checkpoint_params;
    Trainer trainer(model, std::move(cfg));
    return trainer.train(train_batch, eval_chunks, on_step);
}

} // namespace specedge
