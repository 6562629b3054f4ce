#include "rhomu/codec.hpp"

#include <stdexcept>
#include <string>

namespace rhomu {

namespace {

void check_symbol(int v, int lo, int hi, const char* what) {
  if (v < lo || v > hi)
    throw std::domain_error(std::string(what) + " index " + std::to_string(v) +
                            " outside [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
}

}  // namespace

int beta(int ytilde, int y, int p) {
  if (p < 1) throw std::domain_error("beta: alphabet size must be positive");
  check_symbol(ytilde, 1, p, "beta: predicted symbol");
  check_symbol(y, 1, p, "beta: true symbol");
  return ((ytilde - y) % p + p) % p;
}

int alpha(int ytilde, int w, int p) {
  if (p < 1) throw std::domain_error("alpha: alphabet size must be positive");
  check_symbol(ytilde, 1, p, "alpha: predicted symbol");
  check_symbol(w, 0, p - 1, "alpha: disturbance symbol");
  // Unique y with (ytilde - y) mod p == w.
  return (ytilde - 1 - w % p + p) % p + 1;
}

Codec Codec::minimal(int p) {
  std::vector<int> tab(static_cast<size_t>(p) * p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) tab[i * p + j] = ((i - j) % p + p) % p;
  return from_beta(p, p, std::move(tab));
}

Codec Codec::from_beta(int p, int w_count, std::vector<int> beta) {
  if (static_cast<int>(beta.size()) != p * p)
    throw std::domain_error("codec: beta table must have p*p entries");
  for (int v : beta)
    if (v < 0 || v >= w_count)
      throw std::domain_error("codec: beta entries must name disturbance symbols");
  Codec c;
  c.p = p;
  c.w_count = w_count;
  c.beta_tab = std::move(beta);
  c.alpha_tab.assign(static_cast<size_t>(p) * w_count, -1);
  for (int i = 0; i < p; ++i) {
    for (int w = 0; w < w_count; ++w) {
      int found = -1;
      bool unique = true;
      for (int j = 0; j < p; ++j) {
        if (c.beta_tab[i * p + j] == w) {
          if (found >= 0) unique = false;
          found = j;
        }
      }
      c.alpha_tab[i * w_count + w] = (found >= 0 && unique) ? found : -1;
    }
  }
  return c;
}

namespace {

// Depth-first enumeration of beta tables Y x Y -> {0..w_count-1}, row-major.
// A row that repeats a value is pruned immediately: if beta(yt, y1) ==
// beta(yt, y2) = w with y1 != y2, no alpha can satisfy both identities at
// (yt, w), so no completion of the table can work. Any table that survives to
// completion has injective rows and therefore an inverting alpha; finding one
// means a codec with w_count symbols exists.
struct BetaSearch {
  int p, w_count;
  std::vector<int> tab;
  long long visited = 0;
  bool found = false;

  void run() {
    tab.assign(static_cast<size_t>(p) * p, -1);
    descend(0);
  }

  void descend(int cell) {
    ++visited;
    if (cell == p * p) {
      found = true;  // injective rows by construction; inversion gives alpha
      return;
    }
    int row = cell / p, col = cell % p;
    for (int w = 0; w < w_count; ++w) {
      bool used = false;
      for (int k = 0; k < col && !used; ++k) used = tab[row * p + k] == w;
      if (used) continue;
      tab[cell] = w;
      descend(cell + 1);
      tab[cell] = -1;
      if (found) return;
    }
  }
};

}  // namespace

MinimalityReport verify_minimality(int p, int bound) {
  if (p < 2) throw std::domain_error("verify_minimality: p must be at least 2");
  if (p > bound)
    throw std::domain_error("verify_minimality: p=" + std::to_string(p) +
                            " exceeds the exhaustive-search bound " + std::to_string(bound));
  MinimalityReport rep;
  rep.p = p;

  Codec c = Codec::minimal(p);
  rep.identity_holds = true;
  for (int i = 0; i < p && rep.identity_holds; ++i)
    for (int j = 0; j < p; ++j)
      if (c.decode(i, c.encode(i, j)) != j) {
        rep.identity_holds = false;
        break;
      }

  BetaSearch search;
  search.p = p;
  search.w_count = p - 1;
  search.run();
  rep.smaller_codec_exists = search.found;
  rep.candidates_examined = search.visited;
  return rep;
}

}  // namespace rhomu
