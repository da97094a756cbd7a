//! Sample sizes the analysis prescribes for a target accuracy.

use klreg::algo::{prescribed_cover_radius, theorem_sample_sizes, Feedback, TheoryBudget};

fn main() {
    // tabular M x A class with rewards in [0, 1] and uniform pi0: D^2 = M A
    let (m_ctx, a) = (4, 5);
    let bound = 1.0;
    for feedback in [Feedback::Reward, Feedback::Preference] {
        println!("{} feedback", feedback.as_str());
        println!("  eta   eps     radius    m          n");
        for eta in [1.0, 4.0] {
            for epsilon in [0.1, 0.01] {
                let coverage = (m_ctx * a) as f64;
                let radius = prescribed_cover_radius(epsilon, 1.0, eta, bound, coverage, feedback);
                let budget = TheoryBudget {
                    epsilon,
                    delta: 0.1,
                    // grid cover of [0, 1]^(M A) at that radius
                    cover_count: (1.0 / radius).ceil().powi((m_ctx * a) as i32),
                    cover_radius: radius,
                    coverage,
                };
                let s = theorem_sample_sizes(&budget, eta, bound, feedback).unwrap();
                println!("  {eta:<5} {epsilon:<7} {radius:<9.2e} {:<10} {}", s.m, s.n);
            }
        }
    }
}
