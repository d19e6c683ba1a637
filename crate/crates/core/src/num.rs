//! Small numeric helpers shared by the statistic, the oracles and the explorer.

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn ksum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// a (a-1) ... (a-k+1), multiplied in descending order. Zero when k > a.
pub fn falling(a: u64, k: u64) -> f64 {
    if k > a {
        return 0.0;
    }
    let mut p = 1.0;
    for t in 0..k {
        p *= (a - t) as f64;
    }
    p
}

/// Natural log of the falling factorial, for large arguments.
pub fn ln_falling(a: u64, k: u64) -> f64 {
    if k > a {
        return f64::NEG_INFINITY;
    }
    (0..k).map(|t| ((a - t) as f64).ln()).sum()
}

pub fn factorial(k: u64) -> f64 {
    falling(k, k)
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = ksum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = ksum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
    (mean, var.sqrt())
}
