use avm_core::ClosureFactors;

/// log Q(x, y, t) by integrating the characteristics of
///
///   Q_t = a Q_x + b Q_y + c Q,
///   a = (p̄β/2)(y - x),
///   b = (p̄(1+α)/2)(x - y) + (p/2)(x - y) + (p/2)(1 - y),
///   c = (pγ/2)(x - 1),
///
/// backwards from `(x, y)` at time `t` to the initial surface with RK4.
pub fn log_q_by_characteristics(kappa: f64, p: f64, f: ClosureFactors, x: f64, y: f64, t: f64) -> f64 {
    let pbar = 1.0 - p;
    let field = |s: [f64; 3]| {
        let (x, y) = (s[0], s[1]);
        let a = 0.5 * pbar * f.beta * (y - x);
        let b = 0.5 * pbar * (1.0 + f.alpha) * (x - y) + 0.5 * p * (x - y) + 0.5 * p * (1.0 - y);
        let c = 0.5 * p * f.gamma * (x - 1.0);
        // dx/ds = -a, dy/ds = -b, d(log Q)/ds = c
        [-a, -b, c]
    };
    let steps = 20_000;
    let h = -t / steps as f64;
    let mut s = [x, y, 0.0];
    let add = |s: [f64; 3], k: [f64; 3], w: f64| [s[0] + w * k[0], s[1] + w * k[1], s[2] + w * k[2]];
    for _ in 0..steps {
        let k1 = field(s);
        let k2 = field(add(s, k1, 0.5 * h));
        let k3 = field(add(s, k2, 0.5 * h));
        let k4 = field(add(s, k3, h));
        for i in 0..3 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    // s[2] = ∫_t^0 c ds
    0.5 * kappa * (s[0] + s[1] - 2.0) - s[2]
}
