#pragma once

// LinearSsp text format (JSON, keys written in this order):
//
//   format          "lssp-linear-ssp"
//   format_version  1
//   n_states, n_actions, dim, goal
//   features        n_states*n_actions rows of length dim, row s*n_actions + a
//   theta           dim numbers
//   mu              n_states rows of length dim, row s' = mu(s')
//
// Numbers are written with round-trip precision.

#include "lssp/ssp.hpp"

#include <iosfwd>
#include <string>

namespace lssp {

inline constexpr int kModelFormatVersion = 1;

void write_model(std::ostream& os, const LinearSsp& ssp);
LinearSsp read_model(std::istream& is);

void save_model(const std::string& path, const LinearSsp& ssp);
LinearSsp load_model(const std::string& path);

}  // namespace lssp
