//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeSet;

use phonrec::PhonemeLabel;

/// The articulatory grouping as a tab-separated table, one group per line.
pub const TABLE1: &str = "\
Vowels\taa ae ah ao aw ax ax-h axr ay eh er ey ih ix iy ow oy uh uw ux
Semivowels\tl r w y hh hv el
Stops\tb d g p t k dx q bcl dcl gcl pcl tcl kcl
Other stops\tpau epi h#
Nasals\tm n ng em en nx
Affricates\tch jh
Fricatives\ts sh z zh f th v dh
";

/// Dictionary and classifier confusions per phoneme. `axh` is written
/// `ax-h`; the second `n` row of the printed table is read as `nx`.
pub const TABLE2: &str = "\
iy\tix,ih\tey,ih,ix
ih\tix,iy,ax,eh\tix,iy,ax,eh,ey
eh\tih,ix\tix,ae,ah
ae\teh,ix\teh
ix\tih,ax,en,iy\tax,ih,ey,iy,eh,axr
ax\tix,ah,ih\tah,ix,ow,axr
uw\tux,ix,uh\tux,ax,ax-h
uh\tix,er,ax\tax,ix,eh,ah
ah\tax,ix\teh,ax,aa
ao\taa\taa
aa\tah,ao\tah,ao
er\taxr,ax\taxr,eh,ix
axr\ter,ax,ix\tax,er,ix
ey\teh\tix,iy,ih
ay\taa\taa,eh
oy\tao,ow\tao,eh,ah
aw\taa\taa,ae,ah
ow\tax,uh\tax,ao,ah,aa
t\tdx,q,d\td,k
k\t-\tt,d,tcl,p
q\t-\tdx,k,d
b\tv\td,dx,q
d\tdx,t\tk,dx,t,tcl
g\t-\tk,dx,b
m\tem\tn
n\tnx,en\tm
ng\tn\tn
nx\t-\tm
f\t-\tth,dh
th\tdh,t\tdh,f,s
v\tf\tdh,f
dh\tth,d\tth,f,v
z\ts,zh\ts,sh
zh\tjh,z,sh,ch\tsh,v,f
ch\tsh\tjh
r\taxr,er\tl,y
y\tix,ux\tr,hv
em\tm\tm
en\tix,n\tn
el\tl\tl,w
hh\thv\thv
";

pub fn labels(list: &str) -> Vec<PhonemeLabel> {
    if list == "-" {
        return Vec::new();
    }
    list.split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| PhonemeLabel::parse(s).unwrap())
        .collect()
}

pub fn table1_groups() -> Vec<(String, Vec<PhonemeLabel>)> {
    TABLE1
        .lines()
        .map(|line| {
            let (name, members) = line.split_once('\t').unwrap();
            (name.to_string(), labels(members))
        })
        .collect()
}

pub fn table2_rows() -> Vec<(PhonemeLabel, Vec<PhonemeLabel>, Vec<PhonemeLabel>)> {
    TABLE2
        .lines()
        .map(|line| {
            let f: Vec<&str> = line.split('\t').collect();
            (PhonemeLabel::parse(f[0]).unwrap(), labels(f[1]), labels(f[2]))
        })
        .collect()
}

// --- linear algebra / DSP ---------------------------------------------------

pub fn matmul_t(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    // a · aᵀ
    a.iter()
        .map(|r| a.iter().map(|s| r.iter().zip(s).map(|(x, y)| x * y).sum()).collect())
        .collect()
}

/// |X[k]|² by the direct O(N²) DFT of `frame` zero-padded to `n`.
pub fn direct_dft_power(frame: &[f64], n: usize) -> Vec<f64> {
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &x) in frame.iter().enumerate() {
                let w = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                re += x * w.cos();
                im += x * w.sin();
            }
            re * re + im * im
        })
        .collect()
}

/// Slope of the ordinary least-squares line through `(t, v)` points,
/// solved from the 2×2 normal equations.
pub fn ols_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (st, sv) = points.iter().fold((0.0, 0.0), |(a, b), &(t, v)| (a + t, b + v));
    let (stt, stv) = points.iter().fold((0.0, 0.0), |(a, b), &(t, v)| (a + t * t, b + t * v));
    (n * stv - st * sv) / (n * stt - st * st)
}

/// Regression deltas by brute force: least-squares slope over the window,
/// sequence ends extended by repetition.
pub fn brute_force_deltas(seq: &[Vec<f64>], window: usize) -> Vec<Vec<f64>> {
    let n = seq.len() as isize;
    let dim = seq.first().map_or(0, Vec::len);
    (0..n)
        .map(|t| {
            (0..dim)
                .map(|d| {
                    let pts: Vec<(f64, f64)> = (-(window as isize)..=window as isize)
                        .map(|k| ((k) as f64, seq[(t + k).clamp(0, n - 1) as usize][d]))
                        .collect();
                    ols_slope(&pts)
                })
                .collect()
        })
        .collect()
}

// --- SVM dual ----------------------------------------------------------------

pub fn dual_objective(q: &[Vec<f64>], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * q[i][j] * alpha[j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{a : 0 ≤ a ≤ c, yᵀa = 0}` by bisection on the
/// multiplier of the equality constraint.
pub fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(&vi, &yi)| (vi - lambda * yi).clamp(0.0, c))
            .collect()
    };
    let g = |lambda: f64| -> f64 { at(lambda).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    while hi - lo > 1e-15 * bound {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Maximizes the SVM dual by accelerated projected gradient with restarts.
pub fn projected_gradient_dual(q: &[Vec<f64>], y: &[f64], c: f64) -> Vec<f64> {
    let n = y.len();
    // Lipschitz constant: the Gershgorin bound on the largest eigenvalue.
    let l = q
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let step = 1.0 / l;
    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| 1.0 - (0..n).map(|j| q[i][j] * a[j]).sum::<f64>())
            .collect()
    };
    let mut x = project(&vec![0.0; n], y, c);
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut best = dual_objective(q, &x);
    for _ in 0..200_000 {
        // Stop once the gradient mapping at x vanishes: x is a fixed point
        // of the projected step, hence optimal.
        let gx = grad(&x);
        let fixed = project(&x.iter().zip(&gx).map(|(a, g)| a + step * g).collect::<Vec<_>>(), y, c);
        if fixed.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < 1e-11 {
            break;
        }
        let g = grad(&z);
        let cand: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi + step * gi).collect();
        let next = project(&cand, y, c);
        let value = dual_objective(q, &next);
        if value < best {
            if t == 1.0 {
                // Even a plain projected step from x does not improve: x is
                // optimal to rounding.
                break;
            }
            // Restart momentum when the objective stops improving.
            t = 1.0;
            z = x.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        z = next.iter().zip(&x).map(|(a, b)| a + momentum * (a - b)).collect();
        x = next;
        t = t_next;
        best = value;
    }
    x
}

// --- graphs ------------------------------------------------------------------

/// Connected components via the transitive closure of the adjacency
/// relation (Floyd–Warshall), as sorted label sets.
pub fn closure_components(
    nodes: &[PhonemeLabel],
    adjacent: impl Fn(usize, usize) -> bool,
) -> BTreeSet<Vec<PhonemeLabel>> {
    let n = nodes.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = i == j || adjacent(i, j) || adjacent(j, i);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            let mut group: Vec<PhonemeLabel> = (0..n).filter(|&j| reach[i][j]).map(|j| nodes[j]).collect();
            group.sort();
            group
        })
        .collect()
}

// --- classifiers -------------------------------------------------------------

/// Fraction of `test` points whose nearest training-class centroid carries their label.
pub fn nearest_centroid_accuracy(train: &[(&[f64], PhonemeLabel)], test: &[(&[f64], PhonemeLabel)]) -> f64 {
    let mut classes: Vec<PhonemeLabel> = train.iter().map(|(_, l)| *l).collect();
    classes.sort();
    classes.dedup();
    let centroids: Vec<Vec<f64>> = classes
        .iter()
        .map(|c| {
            let members: Vec<&[f64]> = train.iter().filter(|(_, l)| l == c).map(|(x, _)| *x).collect();
            let mut m = vec![0.0; members[0].len()];
            for x in &members {
                for (a, v) in m.iter_mut().zip(x.iter()) {
                    *a += v / members.len() as f64;
                }
            }
            m
        })
        .collect();
    let correct = test
        .iter()
        .filter(|(x, l)| {
            let dist = |c: &Vec<f64>| c.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let best = (0..classes.len())
                .min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b])))
                .unwrap();
            classes[best] == *l
        })
        .count();
    correct as f64 / test.len() as f64
}
