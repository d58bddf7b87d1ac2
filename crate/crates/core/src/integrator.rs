//! Explicit embedded Runge–Kutta integrator of order 8 with 5th and 3rd
//! order error estimators (Dormand–Prince 8(5,3)), for complex state
//! vectors.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};

/// Step-size controlled DOP853 integrator.
#[derive(Debug, Clone, Copy)]
pub struct Dop853 {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on any single step.
    pub h_max: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

impl Dop853 {
    pub fn new(tol: f64, h_max: f64) -> Self {
        Dop853 { rtol: tol, atol: tol, h_max, max_steps: 1_000_000 }
    }

    /// Integrates `dy/dt = f(t, y)` from `t0` to `t1 > t0`.
    pub fn integrate<F>(&self, f: F, t0: f64, y0: &CVector, t1: f64) -> Result<CVector>
    where
        F: FnMut(f64, &CVector) -> CVector,
    {
        self.integrate_with_stats(f, t0, y0, t1).map(|(y, _)| y)
    }

    pub fn integrate_with_stats<F>(&self, mut f: F, t0: f64, y0: &CVector, t1: f64) -> Result<(CVector, Stats)>
    where
        F: FnMut(f64, &CVector) -> CVector,
    {
        if !(t1 > t0) {
            return Err(Error::InvalidArgument(format!("integration interval [{t0}, {t1}] is empty")));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        let span = t1 - t0;
        let mut stats = Stats::default();
        let mut t = t0;
        let mut y = y0.clone();
        let mut k1 = f(t, &y);
        let mut h = self.h_max.min(span);
        let mut last_rejected = false;

        while t < t1 {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepFailure { t });
            }
            let last = t + h >= t1;
            if last {
                h = t1 - t;
            }
            let (y_new, k_new, err) = self.attempt(&mut f, t, &y, &k1, h);
            if err <= 1.0 {
                stats.accepted += 1;
                let mut scale = if err == 0.0 { MAX_SCALE } else { (SAFETY * err.powf(-ALPHA)).clamp(MIN_SCALE, MAX_SCALE) };
                if last_rejected {
                    scale = scale.min(1.0);
                }
                last_rejected = false;
                t = if last { t1 } else { t + h };
                y = y_new;
                k1 = k_new;
                h = (h * scale).min(self.h_max);
            } else {
                stats.rejected += 1;
                last_rejected = true;
                h *= (SAFETY * err.powf(-ALPHA)).max(MIN_SCALE);
                if h <= f64::EPSILON * t.abs().max(span) {
                    return Err(Error::StepFailure { t });
                }
            }
        }
        Ok((y, stats))
    }

    /// One trial step; returns the new state, `f` at the new state and the
    /// scaled error norm.
    fn attempt<F>(&self, f: &mut F, t: f64, y: &CVector, k1: &CVector, h: f64) -> (CVector, CVector, f64)
    where
        F: FnMut(f64, &CVector) -> CVector,
    {
        let comb = |terms: &[(f64, &CVector)]| -> CVector {
            let mut acc = y.clone();
            for (w, k) in terms {
                acc.axpy(C64::new(h * w, 0.0), k, C64::new(1.0, 0.0));
            }
            acc
        };
        let k2 = f(t + C2 * h, &comb(&[(A21, k1)]));
        let k3 = f(t + C3 * h, &comb(&[(A31, k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &comb(&[(A41, k1), (A43, &k3)]));
        let k5 = f(t + C5 * h, &comb(&[(A51, k1), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + C6 * h, &comb(&[(A61, k1), (A64, &k4), (A65, &k5)]));
        let k7 = f(t + C7 * h, &comb(&[(A71, k1), (A74, &k4), (A75, &k5), (A76, &k6)]));
        let k8 = f(t + C8 * h, &comb(&[(A81, k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]));
        let k9 = f(
            t + C9 * h,
            &comb(&[(A91, k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)]),
        );
        let k10 = f(
            t + C10 * h,
            &comb(&[(A101, k1), (A104, &k4), (A105, &k5), (A106, &k6), (A107, &k7), (A108, &k8), (A109, &k9)]),
        );
        let k11 = f(
            t + C11 * h,
            &comb(&[
                (A111, k1),
                (A114, &k4),
                (A115, &k5),
                (A116, &k6),
                (A117, &k7),
                (A118, &k8),
                (A119, &k9),
                (A1110, &k10),
            ]),
        );
        let k12 = f(
            t + h,
            &comb(&[
                (A121, k1),
                (A124, &k4),
                (A125, &k5),
                (A126, &k6),
                (A127, &k7),
                (A128, &k8),
                (A129, &k9),
                (A1210, &k10),
                (A1211, &k11),
            ]),
        );

        let n = y.len();
        let mut incr = CVector::zeros(n);
        let mut err5 = CVector::zeros(n);
        let mut err3 = CVector::zeros(n);
        for i in 0..n {
            let s = B1 * k1[i] + B6 * k6[i] + B7 * k7[i] + B8 * k8[i] + B9 * k9[i] + B10 * k10[i] + B11 * k11[i] + B12 * k12[i];
            incr[i] = s;
            err5[i] = s - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
            err3[i] = ER1 * k1[i]
                + ER6 * k6[i]
                + ER7 * k7[i]
                + ER8 * k8[i]
                + ER9 * k9[i]
                + ER10 * k10[i]
                + ER11 * k11[i]
                + ER12 * k12[i];
        }
        let y_new = y + incr * C64::new(h, 0.0);

        let (mut e5, mut e3) = (0.0, 0.0);
        for i in 0..n {
            let sk = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
            e5 += (err5[i].norm() / sk).powi(2);
            e3 += (err3[i].norm() / sk).powi(2);
        }
        let deno = e5 + 0.01 * e3;
        let deno = if deno > 0.0 { deno } else { 1.0 };
        let err = h.abs() * e5 * (1.0 / (n as f64 * deno)).sqrt();

        let k_new = f(t + h, &y_new);
        (y_new, k_new, err)
    }
}

const SAFETY: f64 = 0.9;
const ALPHA: f64 = 1.0 / 8.0;
const MIN_SCALE: f64 = 0.333;
const MAX_SCALE: f64 = 6.0;

const C2: f64 = 0.526001519587677318785587544488e-01;
const C3: f64 = 0.789002279381515978178381316732e-01;
const C4: f64 = 0.118350341907227396726757197510e+00;
const C5: f64 = 0.281649658092772603273242802490e+00;
const C6: f64 = 0.333333333333333333333333333333e+00;
const C7: f64 = 0.25e+00;
const C8: f64 = 0.307692307692307692307692307692e+00;
const C9: f64 = 0.651282051282051282051282051282e+00;
const C10: f64 = 0.6e+00;
const C11: f64 = 0.857142857142857142857142857142e+00;

const B1: f64 = 5.42937341165687622380535766363e-2;
const B6: f64 = 4.45031289275240888144113950566e0;
const B7: f64 = 1.89151789931450038304281599044e0;
const B8: f64 = -5.8012039600105847814672114227e0;
const B9: f64 = 3.1116436695781989440891606237e-1;
const B10: f64 = -1.52160949662516078556178806805e-1;
const B11: f64 = 2.01365400804030348374776537501e-1;
const B12: f64 = 4.47106157277725905176885569043e-2;

const BHH1: f64 = 0.244094488188976377952755905512e+00;
const BHH2: f64 = 0.733846688281611857341361741547e+00;
const BHH3: f64 = 0.220588235294117647058823529412e-01;

const ER1: f64 = 0.1312004499419488073250102996e-01;
const ER6: f64 = -0.1225156446376204440720569753e+01;
const ER7: f64 = -0.4957589496572501915214079952e+00;
const ER8: f64 = 0.1664377182454986536961530415e+01;
const ER9: f64 = -0.3503288487499736816886487290e+00;
const ER10: f64 = 0.3341791187130174790297318841e+00;
const ER11: f64 = 0.8192320648511571246570742613e-01;
const ER12: f64 = -0.2235530786388629525884427845e-01;

const A21: f64 = 5.26001519587677318785587544488e-2;
const A31: f64 = 1.97250569845378994544595329183e-2;
const A32: f64 = 5.91751709536136983633785987549e-2;
const A41: f64 = 2.95875854768068491816892993775e-2;
const A43: f64 = 8.87627564304205475450678981324e-2;
const A51: f64 = 2.41365134159266685502369798665e-1;
const A53: f64 = -8.84549479328286085344864962717e-1;
const A54: f64 = 9.24834003261792003115737966543e-1;
const A61: f64 = 3.7037037037037037037037037037e-2;
const A64: f64 = 1.70828608729473871279604482173e-1;
const A65: f64 = 1.25467687566822425016691814123e-1;
const A71: f64 = 3.7109375e-2;
const A74: f64 = 1.70252211019544039314978060272e-1;
const A75: f64 = 6.02165389804559606850219397283e-2;
const A76: f64 = -1.7578125e-2;
const A81: f64 = 3.70920001185047927108779319836e-2;
const A84: f64 = 1.70383925712239993810214054705e-1;
const A85: f64 = 1.07262030446373284651809199168e-1;
const A86: f64 = -1.53194377486244017527936158236e-2;
const A87: f64 = 8.27378916381402288758473766002e-3;
const A91: f64 = 6.24110958716075717114429577812e-1;
const A94: f64 = -3.36089262944694129406857109825e0;
const A95: f64 = -8.68219346841726006818189891453e-1;
const A96: f64 = 2.75920996994467083049415600797e1;
const A97: f64 = 2.01540675504778934086186788979e1;
const A98: f64 = -4.34898841810699588477366255144e1;
const A101: f64 = 4.77662536438264365890433908527e-1;
const A104: f64 = -2.48811461997166764192642586468e0;
const A105: f64 = -5.90290826836842996371446475743e-1;
const A106: f64 = 2.12300514481811942347288949897e1;
const A107: f64 = 1.52792336328824235832596922938e1;
const A108: f64 = -3.32882109689848629194453265587e1;
const A109: f64 = -2.03312017085086261358222928593e-2;
const A111: f64 = -9.3714243008598732571704021658e-1;
const A114: f64 = 5.18637242884406370830023853209e0;
const A115: f64 = 1.09143734899672957818500254654e0;
const A116: f64 = -8.14978701074692612513997267357e0;
const A117: f64 = -1.85200656599969598641566180701e1;
const A118: f64 = 2.27394870993505042818970056734e1;
const A119: f64 = 2.49360555267965238987089396762e0;
const A1110: f64 = -3.0467644718982195003823669022e0;
const A121: f64 = 2.27331014751653820792359768449e0;
const A124: f64 = -1.05344954667372501984066689879e1;
const A125: f64 = -2.00087205822486249909675718444e0;
const A126: f64 = -1.79589318631187989172765950534e1;
const A127: f64 = 2.79488845294199600508499808837e1;
const A128: f64 = -2.85899827713502369474065508674e0;
const A129: f64 = -8.87285693353062954433549289258e0;
const A1210: f64 = 1.23605671757943030647266201528e1;
const A1211: f64 = 6.43392746015763530355970484046e-1;
