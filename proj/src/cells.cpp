#include "cvc/cells.hpp"

#include "cvc/errors.hpp"

namespace cvc {

CellKind cell_kind_from_string(const std::string& s) {
    if (s == "lstm") return CellKind::Lstm;
    if (s == "gru") return CellKind::Gru;
    throw InvalidConfig("unknown cell kind: \"" + s + "\" (expected lstm or gru)");
}

std::string to_string(CellKind kind) { return kind == CellKind::Lstm ? "lstm" : "gru"; }

void create_cell_params(ParameterStore& store, const std::string& prefix, CellKind kind,
                        std::size_t input_dim, std::size_t hidden_dim, std::mt19937_64& rng) {
    if (input_dim == 0 || hidden_dim == 0) {
        throw InvalidConfig("cell dimensions must be positive");
    }
    std::size_t gates = kind == CellKind::Lstm ? 4 : 3;
    store.create_uniform(prefix + "/W", {gates * hidden_dim, input_dim}, input_dim, rng);
    store.create_uniform(prefix + "/U", {gates * hidden_dim, hidden_dim}, hidden_dim, rng);
    Tensor& b = store.create(prefix + "/b", {gates * hidden_dim});
    if (kind == CellKind::Lstm) {
        // forget-gate block is rows [H, 2H)
        for (std::size_t i = hidden_dim; i < 2 * hidden_dim; ++i) b[i] = 1.0;
    }
}

std::size_t cell_param_count(CellKind kind, std::size_t input_dim, std::size_t hidden_dim) {
    std::size_t gates = kind == CellKind::Lstm ? 4 : 3;
    return gates * (hidden_dim * input_dim + hidden_dim * hidden_dim + hidden_dim);
}

CellVars bind_cell(const TapeBinding& binding, const std::string& prefix, CellKind kind,
                   std::size_t hidden_dim) {
    CellVars cell;
    cell.kind = kind;
    cell.hidden_dim = hidden_dim;
    cell.w = binding[prefix + "/W"];
    cell.u = binding[prefix + "/U"];
    cell.b = binding[prefix + "/b"];
    return cell;
}

CellState cell_zero_state(Tape& tape, CellKind kind, std::size_t hidden_dim) {
    CellState state;
    state.h = tape.leaf(Tensor({hidden_dim}));
    if (kind == CellKind::Lstm) state.c = tape.leaf(Tensor({hidden_dim}));
    return state;
}

CellState lstm_step(const CellVars& cell, Var x, const CellState& state) {
    if (!state.c.has_value()) throw ShapeMismatch("lstm_step requires a memory vector");
    std::size_t hd = cell.hidden_dim;
    Var pre = add(add(matvec(cell.w, x), matvec(cell.u, state.h)), cell.b);
    Var i = sigmoid(slice(pre, 0, hd));
    Var f = sigmoid(slice(pre, hd, hd));
    Var g = tanh(slice(pre, 2 * hd, hd));
    Var o = sigmoid(slice(pre, 3 * hd, hd));
    Var c_next = add(mul(f, *state.c), mul(i, g));
    CellState next;
    next.h = mul(o, tanh(c_next));
    next.c = c_next;
    return next;
}

CellState gru_step(const CellVars& cell, Var x, const CellState& state) {
    std::size_t hd = cell.hidden_dim;
    Var wx = add(matvec(cell.w, x), cell.b);
    Var uh = matvec(cell.u, state.h);
    Var z = sigmoid(add(slice(wx, 0, hd), slice(uh, 0, hd)));
    Var r = sigmoid(add(slice(wx, hd, hd), slice(uh, hd, hd)));
    Var n = tanh(add(slice(wx, 2 * hd, hd), mul(r, slice(uh, 2 * hd, hd))));
    CellState next;
    next.h = add(mul(affine(z, -1.0, 1.0), n), mul(z, state.h));
    return next;
}

CellState cell_step(const CellVars& cell, Var x, const CellState& state) {
    return cell.kind == CellKind::Lstm ? lstm_step(cell, x, state) : gru_step(cell, x, state);
}

std::vector<CellState> unroll(const CellVars& cell, std::span<const Var> inputs,
                              CellState initial) {
    if (inputs.empty()) throw EmptyInput("unroll over an empty input sequence");
    std::vector<CellState> states;
    states.reserve(inputs.size());
    CellState current = initial;
    for (Var x : inputs) {
        current = cell_step(cell, x, current);
        states.push_back(current);
    }
    return states;
}

} // namespace cvc
