#pragma once
// Exact hypergeometric machinery and the closed-form decision quantities:
// the verification tail, the acceptance threshold r0, the minimum background
// knowledge size L_min, the adversary minima v_min / v_opt / n_min, and the
// cheating-detection probability.
//
// Everything is evaluated in arbitrary-precision rational arithmetic; doubles
// appear only at the reporting boundary.  The adversary minima are exact
// integers at N = 500000 and naive double evaluation loses them.

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <vector>

namespace dataring::stats {

using Int = mpz_class;
using Rat = mpq_class;

// Exact rational from a decimal literal such as "0.05" or "0.91".
Rat rat_from_decimal(const std::string& text);

double to_double(const Rat& r);

// C(n, k); zero outside 0 <= k <= n.
Int binom(long n, long k);

// Hypergeometric pmf: Pr(R = r) for R ~ HG(N, V, L).
Rat hyper_pmf(long N, long V, long L, long r);

// Eq. 1 tail: Pr(R >= r0) = sum_{r=r0}^{L} C(V,r) C(N-V,L-r) / C(N,L).
Rat hyper_tail(long N, long V, long L, long r0);

// Eq. 3: largest r in [1, L] with Pr(R >= r) >= 1 - eta.
// Throws std::domain_error("background knowledge below L_min") if no r works.
long choose_r0(long N, long V, long L, const Rat& eta);

// Minimum L with Pr(R = 0) < eta at V = rho*N, where
// Pr(R = 0) = C(N-V, L) / C(N, L).
long l_min(long N, double rho, const Rat& eta);
Rat pr_zero_overlap(long N, long V, long L);

// Eq. 4: smallest v in [0, V] with Pr(R_v >= r0) >= theta, R_v ~ HG(N, v, L).
// Throws std::domain_error("target unattainable") when even v = V fails.
long v_min(long N, long V, long L, const Rat& theta, long r0);
// Linear-scan variant, kept as the independent test oracle for the bisection.
long v_min_linear(long N, long V, long L, const Rat& theta, long r0);

struct VOpt {
  long v;   // max of v_min over attainable r0
  long r0;  // the r0 achieving it
};

// Maximum of v_min over r0 in [1, L], skipping unattainable r0.
// Throws std::domain_error("target unattainable") if every r0 is unattainable.
VOpt v_opt(long N, long V, long L, const Rat& theta);

// Eq. 5: smallest n in [0, N] with Pr(X >= v_opt) >= theta, X ~ HG(N, n, V).
long n_min(long N, long V, long vopt, const Rat& theta);

// Eq. 6: 1 - (1 - pt*pc*pd)^m.
double detection_prob(long m, double pt, double pc, double pd);

// Closed form for the deployed schedule: exactly m_t of the m queries are
// tests, and the participant cheats per answer independently with p_c.  Each
// of the m_t tests then sees a cheat answer with probability p_c, so
// detection = 1 - (1 - pc*pd)^{m_t}.  Reported alongside Eq. 6 to quantify
// the gap introduced by its independent-test-position model.
double detection_prob_fixed_tests(long m_t, double pc, double pd);

}  // namespace dataring::stats
