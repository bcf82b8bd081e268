//! Dormand-Prince 5(4) stepper with continuous extension, used for flight arcs
//! whose force depends on position.

/// Number of components: position, velocity and the 2x2 variational matrix
/// (row-major).
pub const DIM: usize = 6;
pub type Vector = [f64; DIM];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step together with its interpolation coefficients.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    rcont: [Vector; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> Vector {
        let theta = if self.h == 0.0 { 0.0 } else { (t - self.t0) / self.h };
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        let mut out = [0.0; DIM];
        for i in 0..DIM {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
        out
    }

    pub fn end(&self) -> Vector {
        let mut out = [0.0; DIM];
        for i in 0..DIM {
            out[i] = self.rcont[0][i] + self.rcont[1][i];
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

fn axpy(y: &Vector, terms: &[(f64, &Vector)], h: f64) -> Vector {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..DIM {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Adaptive stepper state. The right-hand side is supplied per call so the
/// stepper stays independent of the physics.
pub struct Stepper {
    pub t: f64,
    pub y: Vector,
    h: f64,
    k1: Vector,
    tol: Tolerances,
}

impl Stepper {
    pub fn new<F: Fn(f64, &Vector) -> Vector>(rhs: &F, t: f64, y: Vector, tol: Tolerances) -> Self {
        let k1 = rhs(t, &y);
        let h = (tol.h_max * 0.05).max(1e-6);
        Self { t, y, h, k1, tol }
    }

    /// Take one accepted step, never going past `t_end`.
    pub fn step<F: Fn(f64, &Vector) -> Vector>(
        &mut self,
        rhs: &F,
        t_end: f64,
    ) -> Result<DenseStep, String> {
        let mut rejections = 0;
        loop {
            let mut h = self.h.min(self.tol.h_max);
            let last = self.t + h >= t_end;
            if last {
                h = t_end - self.t;
            }
            if h <= 0.0 {
                return Err(format!("non-positive step at t = {}", self.t));
            }
            let (t, y, k1) = (self.t, &self.y, &self.k1);
            let k2 = rhs(t + C2 * h, &axpy(y, &[(A21, k1)], h));
            let k3 = rhs(t + C3 * h, &axpy(y, &[(A31, k1), (A32, &k2)], h));
            let k4 = rhs(t + C4 * h, &axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h));
            let k5 = rhs(
                t + C5 * h,
                &axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
            );
            let k6 = rhs(
                t + h,
                &axpy(y, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
            );
            let y1 = axpy(y, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], h);
            let t1 = if last { t_end } else { t + h };
            let k7 = rhs(t1, &y1);

            let mut err = 0.0;
            for i in 0..DIM {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y1[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / DIM as f64).sqrt();
            if !err.is_finite() {
                return Err(format!("non-finite error estimate at t = {t}"));
            }

            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                let mut ydiff = [0.0; DIM];
                let mut bspl = [0.0; DIM];
                let mut r4 = [0.0; DIM];
                let mut r5 = [0.0; DIM];
                for i in 0..DIM {
                    ydiff[i] = y1[i] - y[i];
                    bspl[i] = h * k1[i] - ydiff[i];
                    r4[i] = ydiff[i] - h * k7[i] - bspl[i];
                    r5[i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                let dense = DenseStep { t0: t, h: t1 - t, rcont: [*y, ydiff, bspl, r4, r5] };
                self.t = t1;
                self.y = y1;
                self.k1 = k7;
                self.h = h * factor;
                return Ok(dense);
            }
            self.h = h * factor.min(1.0);
            rejections += 1;
            if rejections > 60 || self.h < 1e-14 * (1.0 + t.abs()) {
                return Err(format!("step size underflow at t = {t}"));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_with_dense_output() {
        // x'' = -x, with the variational block carried along.
        let rhs = |_t: f64, y: &Vector| -> Vector { [y[1], -y[0], y[4], y[5], -y[2], -y[3]] };
        let tol = Tolerances { rtol: 1e-12, atol: 1e-13, h_max: 0.5 };
        let mut st = Stepper::new(&rhs, 0.0, [1.0, 0.0, 1.0, 0.0, 0.0, 1.0], tol);
        let mut steps = Vec::new();
        while st.t < 10.0 {
            steps.push(st.step(&rhs, 10.0).unwrap());
        }
        assert!((st.y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((st.y[3] - 10f64.sin()).abs() < 1e-10);
        for s in &steps {
            let tm = s.t0 + 0.37 * s.h;
            assert!((s.eval(tm)[0] - tm.cos()).abs() < 1e-9);
        }
    }
}
