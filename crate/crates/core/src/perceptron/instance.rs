use rand::Rng;

use crate::error::{Error, Result};

/// Binary teacher-student problem in gauged form: `G[mu][q] = y_mu x[mu][q]`,
/// so the teacher has a strictly positive margin on every pattern.
#[derive(Clone, Debug)]
pub struct TeacherStudentInstance {
    n: usize,
    p: usize,
    alpha: f64,
    /// row-major `P x N`
    gauged: Vec<i8>,
    /// column-major copy (`N x P`) for per-site updates
    gauged_by_site: Vec<i8>,
    labels: Vec<i8>,
    teacher: Vec<i8>,
}

/// Number of patterns for loading `alpha`: `round(alpha N)`.
pub fn pattern_count(n: usize, alpha: f64) -> usize {
    (alpha * n as f64).round() as usize
}

/// Uniform teacher, i.i.d. +-1 patterns, labels from the teacher sign.
/// Patterns landing exactly on the teacher's decision boundary are redrawn.
pub fn generate_instance<R: Rng + ?Sized>(
    n: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<TeacherStudentInstance> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    let p = pattern_count(n, alpha);
    let teacher: Vec<i8> = (0..n).map(|_| spin(rng)).collect();
    let mut raw = Vec::with_capacity(p * n);
    let mut row = vec![0i8; n];
    for _ in 0..p {
        loop {
            row.iter_mut().for_each(|x| *x = spin(rng));
            if dot(&row, &teacher) != 0 {
                break;
            }
        }
        raw.extend_from_slice(&row);
    }
    let mut inst = TeacherStudentInstance::from_raw(n, &raw, teacher)?;
    inst.alpha = alpha;
    Ok(inst)
}

#[inline]
pub(crate) fn spin<R: Rng + ?Sized>(rng: &mut R) -> i8 {
    if rng.random::<bool>() {
        1
    } else {
        -1
    }
}

pub(crate) fn dot(a: &[i8], b: &[i8]) -> i32 {
    a.iter().zip(b).map(|(&x, &y)| x as i32 * y as i32).sum()
}

impl TeacherStudentInstance {
    /// Gauge raw `P x N` patterns (row-major) against `teacher`.
    pub fn from_raw(n: usize, raw: &[i8], teacher: Vec<i8>) -> Result<Self> {
        if teacher.len() != n || raw.len() % n != 0 {
            return Err(Error::InvalidInput("pattern and teacher sizes disagree".into()));
        }
        if raw.iter().chain(&teacher).any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidInput("patterns and teacher must be +-1".into()));
        }
        let p = raw.len() / n;
        let mut gauged = Vec::with_capacity(raw.len());
        let mut labels = Vec::with_capacity(p);
        for row in raw.chunks_exact(n) {
            let h = dot(row, &teacher);
            if h == 0 {
                return Err(Error::InvalidInput("pattern on the teacher boundary".into()));
            }
            let y: i8 = if h > 0 { 1 } else { -1 };
            labels.push(y);
            gauged.extend(row.iter().map(|&x| x * y));
        }
        let mut gauged_by_site = vec![0i8; p * n];
        for mu in 0..p {
            for q in 0..n {
                gauged_by_site[q * p + mu] = gauged[mu * n + q];
            }
        }
        Ok(TeacherStudentInstance {
            n,
            p,
            alpha: p as f64 / n as f64,
            gauged,
            gauged_by_site,
            labels,
            teacher,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn teacher(&self) -> &[i8] {
        &self.teacher
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    /// Gauged pattern `mu` (length `N`).
    pub fn pattern(&self, mu: usize) -> &[i8] {
        &self.gauged[mu * self.n..(mu + 1) * self.n]
    }

    /// Column `q` of the gauged matrix (length `P`).
    pub fn site_column(&self, q: usize) -> &[i8] {
        &self.gauged_by_site[q * self.p..(q + 1) * self.p]
    }

    /// Integer margins `sum_q G[mu][q] w_q`; the real margin is this over `sqrt N`.
    pub fn integer_margins(&self, w: &[i8]) -> Vec<i32> {
        (0..self.p).map(|mu| dot(self.pattern(mu), w)).collect()
    }

    /// Real margins `(1/sqrt N) sum_q G[mu][q] w_q`.
    pub fn margins(&self, w: &[i8]) -> Vec<f64> {
        let root = (self.n as f64).sqrt();
        self.integer_margins(w)
            .into_iter()
            .map(|h| h as f64 / root)
            .collect()
    }
}
