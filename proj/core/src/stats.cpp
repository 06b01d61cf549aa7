#include "dataring/stats.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace dataring::stats {

Rat rat_from_decimal(const std::string& text) {
  std::string digits;
  long frac_digits = -1;
  bool negative = false;
  std::size_t i = 0;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      if (frac_digits >= 0) throw std::invalid_argument("bad decimal: " + text);
      frac_digits = 0;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      if (frac_digits >= 0) ++frac_digits;
    } else {
      throw std::invalid_argument("bad decimal: " + text);
    }
  }
  if (digits.empty()) throw std::invalid_argument("bad decimal: " + text);
  Int num(digits, 10);  // base pinned: leading zeros must not trigger octal
  Int den(1);
  for (long k = 0; k < std::max(frac_digits, 0L); ++k) den *= 10;
  if (negative) num = -num;
  Rat r(num, den);
  r.canonicalize();
  return r;
}

double to_double(const Rat& r) { return r.get_d(); }

Int binom(long n, long k) {
  if (k < 0 || n < 0 || k > n) return Int(0);
  Int out;
  mpz_bin_uiui(out.get_mpz_t(), static_cast<unsigned long>(n),
               static_cast<unsigned long>(k));
  return out;
}

namespace {

void check_hyper_params(long N, long V, long L, long r0) {
  if (N < 0 || V < 0 || L < 0 || V > N || L > N || r0 < 0 || r0 > L)
    throw std::invalid_argument("hypergeometric parameters out of range");
}

// sum_{k=r0}^{min(v,L)} C(v,k) C(N-v,L-k) as an exact integer; the caller
// divides by C(N,L).  Terms follow the two-step exact recurrence
//   t *= (v-k)/(k+1)           [C(v,k) -> C(v,k+1)]
//   t *= (L-k)/(N-v-L+k+1)     [C(N-v,L-k) -> C(N-v,L-k-1)]
// each division exact on its own, which keeps every intermediate integral.
Int tail_numerator(long N, long v, long L, long r0) {
  const long hi = std::min(v, L);
  if (r0 > hi) return Int(0);
  if (r0 < 0) r0 = 0;
  Int t = binom(v, r0) * binom(N - v, L - r0);
  Int sum = t;
  for (long k = r0; k < hi; ++k) {
    t *= (v - k);
    t /= (k + 1);
    t *= (L - k);
    t /= (N - v - L + k + 1);
    sum += t;
  }
  return sum;
}

// Predicate tail(N, marked, draws, r0) >= theta without forming the quotient.
bool tail_at_least(long N, long marked, long draws, long r0, const Rat& theta,
                   const Int& denom) {
  Int lhs = tail_numerator(N, marked, draws, r0) * theta.get_den();
  Int rhs = theta.get_num() * denom;
  return lhs >= rhs;
}

}  // namespace

Rat hyper_pmf(long N, long V, long L, long r) {
  check_hyper_params(N, V, L, 0);
  if (r < 0 || r > L) return Rat(0);
  Rat out(binom(V, r) * binom(N - V, L - r), binom(N, L));
  out.canonicalize();
  return out;
}

Rat hyper_tail(long N, long V, long L, long r0) {
  check_hyper_params(N, V, L, r0);
  Rat out(tail_numerator(N, V, L, r0), binom(N, L));
  out.canonicalize();
  return out;
}

long choose_r0(long N, long V, long L, const Rat& eta) {
  check_hyper_params(N, V, L, 0);
  if (eta <= 0 || eta >= 1) throw std::invalid_argument("eta must be in (0,1)");
  const Rat bound = Rat(1) - eta;
  const Int denom = binom(N, L);
  // Pr(R >= r) is non-increasing in r: bisect for the largest qualifying r.
  long lo = 1, hi = L, best = 0;
  while (lo <= hi) {
    long mid = lo + (hi - lo) / 2;
    if (tail_at_least(N, V, L, mid, bound, denom)) {
      best = mid;
      lo = mid + 1;
    } else {
      hi = mid - 1;
    }
  }
  if (best == 0) throw std::domain_error("background knowledge below L_min");
  return best;
}

Rat pr_zero_overlap(long N, long V, long L) {
  check_hyper_params(N, V, L, 0);
  Rat out(binom(N - V, L), binom(N, L));
  out.canonicalize();
  return out;
}

long l_min(long N, double rho, const Rat& eta) {
  if (!(rho > 0.0) || rho > 1.0) throw std::invalid_argument("rho must be in (0,1]");
  if (eta <= 0 || eta >= 1) throw std::invalid_argument("eta must be in (0,1)");
  const long V = std::lround(rho * static_cast<double>(N));
  if (V < 1 || V > N) throw std::invalid_argument("rho*N out of range");
  // Pr(R=0) = C(N-V,L)/C(N,L) is strictly decreasing in L; bisect the
  // smallest L with Pr(R=0) < eta.  L = N always qualifies (probability 0).
  long lo = 1, hi = N;
  while (lo < hi) {
    long mid = lo + (hi - lo) / 2;
    Int lhs = binom(N - V, mid) * eta.get_den();
    Int rhs = eta.get_num() * binom(N, mid);
    if (lhs < rhs) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

long v_min(long N, long V, long L, const Rat& theta, long r0) {
  check_hyper_params(N, V, L, r0);
  if (theta <= 0 || theta >= 1) throw std::invalid_argument("theta must be in (0,1)");
  if (r0 < 1) throw std::invalid_argument("r0 must be >= 1");
  const Int denom = binom(N, L);
  if (!tail_at_least(N, V, L, r0, theta, denom))
    throw std::domain_error("target unattainable");
  // Pr(R_v >= r0) is non-decreasing in v: bisect the smallest qualifying v.
  long lo = 0, hi = V;
  while (lo < hi) {
    long mid = lo + (hi - lo) / 2;
    if (tail_at_least(N, mid, L, r0, theta, denom)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

long v_min_linear(long N, long V, long L, const Rat& theta, long r0) {
  check_hyper_params(N, V, L, r0);
  const Int denom = binom(N, L);
  for (long v = 0; v <= V; ++v) {
    if (tail_at_least(N, v, L, r0, theta, denom)) return v;
  }
  throw std::domain_error("target unattainable");
}

VOpt v_opt(long N, long V, long L, const Rat& theta) {
  check_hyper_params(N, V, L, 0);
  const Int denom = binom(N, L);
  VOpt best{-1, 0};
  long floor_v = 0;  // v_min search floor; valid because the tail is
                     // non-increasing in r0, so v_min cannot shrink as r0 grows
  for (long r0 = 1; r0 <= L; ++r0) {
    if (!tail_at_least(N, V, L, r0, theta, denom)) break;  // larger r0 only worse
    long lo = floor_v, hi = V;
    while (lo < hi) {
      long mid = lo + (hi - lo) / 2;
      if (tail_at_least(N, mid, L, r0, theta, denom)) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    floor_v = lo;
    if (lo > best.v) best = VOpt{lo, r0};
  }
  if (best.v < 0) throw std::domain_error("target unattainable");
  return best;
}

long n_min(long N, long V, long vopt, const Rat& theta) {
  if (vopt < 0 || vopt > V) throw std::invalid_argument("v_opt must be in [0, V]");
  if (vopt == 0) return 0;
  const Int denom = binom(N, V);
  long lo = 0, hi = N;
  while (lo < hi) {
    long mid = lo + (hi - lo) / 2;
    if (tail_at_least(N, mid, V, vopt, theta, denom)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

double detection_prob(long m, double pt, double pc, double pd) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  return 1.0 - std::pow(1.0 - pt * pc * pd, static_cast<double>(m));
}

double detection_prob_fixed_tests(long m_t, double pc, double pd) {
  if (m_t < 0) throw std::invalid_argument("m_t must be >= 0");
  return 1.0 - std::pow(1.0 - pc * pd, static_cast<double>(m_t));
}

}  // namespace dataring::stats
