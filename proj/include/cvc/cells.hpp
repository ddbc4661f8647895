#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cvc/autodiff.hpp"
#include "cvc/optim.hpp"

namespace cvc {

enum class CellKind { Lstm, Gru };

CellKind cell_kind_from_string(const std::string& s); // throws InvalidConfig
std::string to_string(CellKind kind);

// Hidden state of one recurrent cell. The memory vector is present for
// LSTM only.
struct CellState {
    Var h;
    std::optional<Var> c;
};

// A cell's parameters bound on one tape. Weights are packed per gate block:
//   LSTM: W [4H,D], U [4H,H], b [4H]   rows ordered  i, f, g, o
//   GRU:  W [3H,D], U [3H,H], b [3H]   rows ordered  z, r, n
struct CellVars {
    CellKind kind = CellKind::Lstm;
    std::size_t hidden_dim = 0;
    Var w, u, b;
};

// Registers <prefix>/W, <prefix>/U, <prefix>/b in the store. Weights are
// uniform(-1/sqrt(fan_in), +), biases zero except the LSTM forget-gate
// block which starts at 1.0.
void create_cell_params(ParameterStore& store, const std::string& prefix, CellKind kind,
                        std::size_t input_dim, std::size_t hidden_dim, std::mt19937_64& rng);

std::size_t cell_param_count(CellKind kind, std::size_t input_dim, std::size_t hidden_dim);

CellVars bind_cell(const TapeBinding& binding, const std::string& prefix, CellKind kind,
                   std::size_t hidden_dim);

CellState cell_zero_state(Tape& tape, CellKind kind, std::size_t hidden_dim);

// Standard LSTM (no peepholes):
//   i,f,o = sigmoid(...), g = tanh(...), c' = f*c + i*g, h' = o*tanh(c')
CellState lstm_step(const CellVars& cell, Var x, const CellState& state);

// GRU with reset-before-candidate gating:
//   z,r = sigmoid(...), n = tanh(Wx + r*(Uh) + b), h' = (1-z)*n + z*h
CellState gru_step(const CellVars& cell, Var x, const CellState& state);

CellState cell_step(const CellVars& cell, Var x, const CellState& state);

// Chains cell_step over an input sequence; output length equals input
// length. Throws EmptyInput on an empty sequence.
std::vector<CellState> unroll(const CellVars& cell, std::span<const Var> inputs,
                              CellState initial);

} // namespace cvc
