#![allow(dead_code)]

/// Kendall's τ_b in O(n log n) (Knight's algorithm).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(y[i].total_cmp(&y[j])));
    let n0 = (n * (n - 1) / 2) as f64;

    // Pairs tied in x, and tied in both.
    let (mut tx, mut txy) = (0.0, 0.0);
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let k = (j - i) as f64;
        tx += k * (k - 1.0) / 2.0;
        let mut a = i;
        while a < j {
            let mut b = a + 1;
            while b < j && y[idx[b]] == y[idx[a]] {
                b += 1;
            }
            let m = (b - a) as f64;
            txy += m * (m - 1.0) / 2.0;
            a = b;
        }
        i = j;
    }

    // Count discordant pairs as inversions when merge-sorting by y.
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = ys.clone();
    let swaps = merge_count(&mut ys, &mut buf);

    let mut ty = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        let k = (j - i) as f64;
        ty += k * (k - 1.0) / 2.0;
        i = j;
    }
    let concordant_minus_discordant = n0 - tx - ty + txy - 2.0 * swaps;
    concordant_minus_discordant / ((n0 - tx) * (n0 - ty)).sqrt()
}

fn merge_count(v: &mut [f64], buf: &mut [f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as f64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    let k2 = k + mid - i;
    buf[k2..n].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Mean and standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Fraction of `v` strictly above `t`.
pub fn empirical_survival(sorted: &[f64], t: f64) -> f64 {
    let k = sorted.partition_point(|&x| x <= t);
    (sorted.len() - k) as f64 / sorted.len() as f64
}

pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn kendall_small_cases() {
    let naive = |x: &[f64], y: &[f64]| {
        let n = x.len();
        let (mut c, mut tx, mut ty) = (0.0, 0.0, 0.0);
        let mut pairs = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                pairs += 1.0;
                let s = (x[i] - x[j]).signum() * (y[i] - y[j]).signum();
                if x[i] == x[j] {
                    tx += 1.0;
                }
                if y[i] == y[j] {
                    ty += 1.0;
                }
                if x[i] != x[j] && y[i] != y[j] {
                    c += s;
                }
            }
        }
        c / ((pairs - tx) * (pairs - ty)).sqrt()
    };
    let x = [0.3, 0.1, 0.9, 0.5, 0.5, 0.2, 0.7, 0.1];
    let y = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
    assert!((kendall_tau_b(&x, &y) - naive(&x, &y)).abs() < 1e-12);
    let y2 = [2.0, 1.0, 5.0, 3.0, 4.0, 0.5, 4.5, 1.5];
    assert!((kendall_tau_b(&x, &y2) - naive(&x, &y2)).abs() < 1e-12);
}
