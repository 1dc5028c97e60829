//! Solves a small bounded linear program directly and checks the answer
//! against its optimality conditions.

use mgp_clearing::lp::{solve_lp, verify_kkt, LinearProgram};

fn main() {
    // minimize -3x - 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18, x, y >= 0
    let mut lp = LinearProgram::new(vec![-3.0, -5.0], vec![0.0; 2], vec![f64::INFINITY; 2]);
    lp.add_le(vec![1.0, 0.0], 4.0, "x cap");
    lp.add_le(vec![0.0, 2.0], 12.0, "y cap");
    lp.add_le(vec![3.0, 2.0], 18.0, "shared");

    let sol = solve_lp(&lp).expect("solvable");
    println!("status {:?} after {} pivots", sol.status, sol.iterations);
    println!("x = {:?}, objective {}", sol.x, sol.objective);
    for (tag, mu) in lp.row_tags.iter().zip(&sol.mu) {
        println!("multiplier on {tag:<7} {mu}");
    }

    let report = verify_kkt(&lp, &sol);
    println!("KKT clean: {}, duality gap {:e}", report.is_clean(), report.duality_gap);

    let mut dump = Vec::new();
    lp.write_tableau(&mut dump).unwrap();
    print!("\n{}", String::from_utf8(dump).unwrap());
}
