#pragma once

// Disturbance codec: encodes the mismatch between a predicted output symbol
// and the true one as a single disturbance symbol w, and decodes the true
// symbol back from (prediction, w). With p output symbols the pair
//
//   beta(ytilde, y) = (index(ytilde) - index(y)) mod p
//   alpha(ytilde, w) = the unique y with beta(ytilde, y) = w
//
// satisfies alpha(ytilde, beta(ytilde, y)) = y for every pair, w = 0 exactly
// on a match, and uses the provably smallest disturbance alphabet (p symbols;
// see verify_minimality, which establishes by search that p-1 cannot work).

#include <cstdint>
#include <vector>

namespace rhomu {

// 1-based symbol indices, 1 <= ytilde, y <= p. Throws std::domain_error on
// out-of-range arguments. First argument is the predicted symbol.
int beta(int ytilde, int y, int p);

// 1-based ytilde, 0 <= w <= p-1; returns the 1-based decoded symbol.
int alpha(int ytilde, int w, int p);

// Table-backed codec over 0-based symbol indices, so tests can plug in
// deliberately broken tables. decode() returns -1 where no unique preimage
// exists (the "no decode" outcome; the minimal codec never produces it).
struct Codec {
  int p = 0;
  int w_count = 0;
  std::vector<int> beta_tab;   // p*p entries, [ytilde*p + y] -> w
  std::vector<int> alpha_tab;  // p*w_count entries, [ytilde*w_count + w] -> y or -1

  static Codec minimal(int p);
  static Codec from_beta(int p, int w_count, std::vector<int> beta);

  int encode(int ytilde, int y) const { return beta_tab[ytilde * p + y]; }
  int decode(int ytilde, int w) const { return alpha_tab[ytilde * w_count + w]; }
};

struct MinimalityReport {
  int p = 0;
  bool identity_holds = false;       // alpha(ytilde, beta(ytilde, y)) == y, all pairs
  bool smaller_codec_exists = false; // any identity-satisfying pair with p-1 symbols
  long long candidates_examined = 0; // beta-table search nodes visited
};

// Exhaustive search over all beta: Y x Y -> {0..p-2} tables (cell-by-cell,
// pruning a row as soon as it repeats a value -- a repeated row value already
// rules out every alpha) paired with alpha built by row inversion. Throws
// std::domain_error unless 2 <= p <= bound.
MinimalityReport verify_minimality(int p, int bound = 4);

}  // namespace rhomu
