#include "cvc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cvc/errors.hpp"

namespace cvc {

ParameterStore::Entry& ParameterStore::entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvalidConfig("unknown parameter: " + name);
    return it->second;
}

const ParameterStore::Entry& ParameterStore::entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvalidConfig("unknown parameter: " + name);
    return it->second;
}

Tensor& ParameterStore::create(const std::string& name, std::vector<std::size_t> shape) {
    if (entries_.count(name)) throw InvalidConfig("parameter already exists: " + name);
    Entry e;
    e.value = Tensor(shape);
    e.grad = Tensor(std::move(shape));
    return entries_.emplace(name, std::move(e)).first->second.value;
}

Tensor& ParameterStore::create_uniform(const std::string& name, std::vector<std::size_t> shape,
                                       std::size_t fan_in, std::mt19937_64& rng) {
    Tensor& v = create(name, std::move(shape));
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = dist(rng);
    return v;
}

bool ParameterStore::has(const std::string& name) const { return entries_.count(name) != 0; }

Tensor& ParameterStore::value(const std::string& name) { return entry(name).value; }
const Tensor& ParameterStore::value(const std::string& name) const { return entry(name).value; }
Tensor& ParameterStore::grad(const std::string& name) { return entry(name).grad; }
const Tensor& ParameterStore::grad(const std::string& name) const { return entry(name).grad; }

std::vector<std::string> ParameterStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
}

std::size_t ParameterStore::total_size() const {
    std::size_t n = 0;
    for (const auto& [_, e] : entries_) n += e.value.size();
    return n;
}

void ParameterStore::zero_grads() {
    for (auto& [_, e] : entries_) e.grad.fill(0.0);
}

double ParameterStore::grad_global_norm() const {
    double sq = 0.0;
    for (const auto& [_, e] : entries_) {
        for (std::size_t i = 0; i < e.grad.size(); ++i) sq += e.grad[i] * e.grad[i];
    }
    return std::sqrt(sq);
}

void ParameterStore::scale_grads(double factor) {
    for (auto& [_, e] : entries_) {
        for (std::size_t i = 0; i < e.grad.size(); ++i) e.grad[i] *= factor;
    }
}

double StepDecaySchedule::lr(std::size_t epoch) const {
    return base_lr * std::pow(factor, static_cast<double>(epoch / period));
}

void StepDecaySchedule::validate() const {
    if (base_lr <= 0.0) throw InvalidConfig("schedule base_lr must be positive");
    if (factor <= 0.0 || factor > 1.0) throw InvalidConfig("schedule factor must be in (0,1]");
    if (period == 0) throw InvalidConfig("schedule period must be positive");
}

void sgd_step(ParameterStore& store, const StepDecaySchedule& schedule, std::size_t epoch,
              double clip_norm) {
    schedule.validate();
    if (clip_norm > 0.0) {
        double norm = store.grad_global_norm();
        if (norm > clip_norm) store.scale_grads(clip_norm / norm);
    }
    double lr = schedule.lr(epoch);
    for (const auto& name : store.names()) {
        Tensor& v = store.value(name);
        const Tensor& g = store.grad(name);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    }
    store.zero_grads();
}

TapeBinding::TapeBinding(Tape& tape, const ParameterStore& store) : tape_(tape) {
    for (const auto& name : store.names()) {
        vars_.emplace(name, tape.leaf(store.value(name)));
    }
}

Var TapeBinding::operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw InvalidConfig("parameter not bound: " + name);
    return it->second;
}

void TapeBinding::flush_gradients(ParameterStore& store) {
    for (const auto& [name, var] : vars_) {
        const Tensor& g = tape_.grad(var);
        Tensor& acc = store.grad(name);
        if (!acc.same_shape(g)) throw ShapeMismatch("flush into a mismatched store: " + name);
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
    }
}

GradCheckReport grad_check(const std::function<double()>& loss_and_grad, ParameterStore& store,
                           double step, std::size_t sample_per_param, std::uint64_t seed) {
    store.zero_grads();
    double base_loss = loss_and_grad();
    if (!std::isfinite(base_loss)) throw NonFiniteLoss("loss is not finite at the check point");

    // Snapshot analytic gradients before finite differences dirty them.
    std::map<std::string, Tensor> analytic;
    for (const auto& name : store.names()) analytic.emplace(name, store.grad(name));

    std::mt19937_64 rng(seed);
    GradCheckReport report;
    for (const auto& name : store.names()) {
        Tensor& v = store.value(name);
        std::vector<std::size_t> coords(v.size());
        std::iota(coords.begin(), coords.end(), 0);
        if (sample_per_param > 0 && coords.size() > sample_per_param) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(sample_per_param);
        }
        double worst = 0.0;
        for (std::size_t c : coords) {
            double saved = v[c];
            v[c] = saved + step;
            double plus = loss_and_grad();
            v[c] = saved - step;
            double minus = loss_and_grad();
            v[c] = saved;
            if (!std::isfinite(plus) || !std::isfinite(minus)) {
                throw NonFiniteLoss("loss is not finite during finite differencing");
            }
            double numeric = (plus - minus) / (2.0 * step);
            double a = analytic.at(name)[c];
            double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            double rel = std::abs(a - numeric) / denom;
            worst = std::max(worst, rel);
            ++report.coords_checked;
        }
        report.per_param[name] = worst;
        if (worst >= report.max_rel_error) {
            report.max_rel_error = worst;
            report.worst_param = name;
        }
    }
    // Finite-difference calls accumulated junk gradients; restore analytic.
    for (const auto& name : store.names()) store.grad(name) = analytic.at(name);
    return report;
}

} // namespace cvc
