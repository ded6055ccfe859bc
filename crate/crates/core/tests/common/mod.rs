//! Dense brute-force reference implementations shared by the integration
//! tests. Everything here works on an `n × n` count matrix and loops over
//! all nodes, pairs and triples directly.

#![allow(dead_code)]

use dyngraph_anomaly::graph::{NodeId, Snapshot};

pub type Dense = Vec<Vec<u64>>;

pub fn dense(n: usize, edges: &[(usize, usize, u64)]) -> Dense {
    let mut m = vec![vec![0u64; n]; n];
    for &(a, b, c) in edges {
        assert_ne!(a, b);
        m[a][b] += c;
        m[b][a] += c;
    }
    m
}

pub fn to_snapshot(t: i64, m: &Dense) -> Snapshot {
    let n = m.len();
    let triples = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (NodeId::from(i), NodeId::from(j), m[i][j]));
    Snapshot::from_counts(t, n, triples).unwrap().0
}

pub fn total(m: &Dense) -> u64 {
    let n = m.len();
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| m[i][j]).sum()
}

pub fn ged(a: &Dense, b: &Dense) -> u64 {
    let n = a.len();
    let mut s = 0;
    for i in 0..n {
        for j in i + 1..n {
            s += a[i][j].abs_diff(b[i][j]);
        }
    }
    s
}

fn degree_counts(m: &Dense) -> Vec<u64> {
    m.iter().map(|row| row.iter().sum()).collect()
}

pub fn dd(a: &Dense, b: &Dense) -> u64 {
    let da = degree_counts(a);
    let db = degree_counts(b);
    let kmax = da.iter().chain(&db).copied().max().unwrap_or(0);
    let mut s = 0u64;
    for k in 1..=kmax {
        let ha = da.iter().filter(|&&d| d == k).count() as i64;
        let hb = db.iter().filter(|&&d| d == k).count() as i64;
        s += ((ha - hb) * (ha - hb)) as u64;
    }
    s
}

/// Barrat coefficient from its definition: ordered neighbour pairs.
pub fn cb(m: &Dense) -> f64 {
    let n = m.len();
    let mut sum = 0.0;
    for i in 0..n {
        let k = (0..n).filter(|&j| m[i][j] > 0).count();
        if k < 2 {
            continue;
        }
        let s: u64 = m[i].iter().sum();
        let mut acc = 0.0;
        for j in 0..n {
            for h in 0..n {
                if j == h || j == i || h == i {
                    continue;
                }
                if m[i][j] > 0 && m[i][h] > 0 && m[j][h] > 0 {
                    acc += (m[i][j] + m[i][h]) as f64 / 2.0;
                }
            }
        }
        sum += acc / ((k - 1) as f64 * s as f64);
    }
    sum / n as f64
}

pub fn probs(m: &Dense) -> Vec<Vec<f64>> {
    let e = total(m) as f64;
    m.iter().map(|row| row.iter().map(|&c| c as f64 / e).collect()).collect()
}

pub fn ms(a: &Dense, b: &Dense) -> f64 {
    let (pa, pb) = (probs(a), probs(b));
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += (pa[i][j] - pb[i][j]).powi(2);
        }
    }
    s
}

pub fn pd(m: &Dense) -> Vec<f64> {
    probs(m).iter().map(|row| row.iter().sum()).collect()
}

pub fn ds(a: &Dense, b: &Dense) -> f64 {
    pd(a).iter().zip(pd(b)).map(|(x, y)| (x - y).powi(2)).sum()
}

fn pair_bias(m: &Dense) -> f64 {
    let e = total(m);
    if e < 2 {
        return 0.0;
    }
    let p = probs(m);
    let n = m.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += p[i][j] * (1.0 - p[i][j]);
        }
    }
    s / (e - 1) as f64
}

fn node_bias(m: &Dense) -> f64 {
    let e = total(m);
    if e < 2 {
        return 0.0;
    }
    pd(m).iter().map(|x| x * (1.0 - x)).sum::<f64>() / (e - 1) as f64
}

pub fn msc(a: &Dense, b: &Dense) -> f64 {
    ms(a, b) - pair_bias(a) - pair_bias(b)
}

pub fn dsc(a: &Dense, b: &Dense) -> f64 {
    ds(a, b) - node_bias(a) - node_bias(b)
}

/// Triple products over all `i < j < k`, normalised by `|E|(|E|-1)(|E|-2)`.
pub fn tp(m: &Dense) -> f64 {
    let e = total(m);
    if e < 3 {
        return 0.0;
    }
    let n = m.len();
    let mut s = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                s += m[i][j] * m[i][k] * m[j][k];
            }
        }
    }
    s as f64 / (e * (e - 1) * (e - 2)) as f64
}

/// `Σ_{i<j<k} p_ij p_ik p_jk` for a dense probability matrix.
pub fn tp_true(p: &[Vec<f64>]) -> f64 {
    let n = p.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                s += p[i][j] * p[i][k] * p[j][k];
            }
        }
    }
    s
}

/// Every multiset of at most `max_edges` edges over the pairs of `n` nodes.
pub fn all_multigraphs(n: usize, max_edges: u64) -> Vec<Dense> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    let mut counts = vec![0u64; pairs.len()];
    fn rec(
        idx: usize,
        left: u64,
        n: usize,
        pairs: &[(usize, usize)],
        counts: &mut Vec<u64>,
        out: &mut Vec<Dense>,
    ) {
        if idx == pairs.len() {
            let edges: Vec<_> = pairs
                .iter()
                .zip(counts.iter())
                .map(|(&(a, b), &c)| (a, b, c))
                .collect();
            out.push(dense(n, &edges));
            return;
        }
        for c in 0..=left {
            counts[idx] = c;
            rec(idx + 1, left - c, n, pairs, counts, out);
        }
        counts[idx] = 0;
    }
    rec(0, max_edges, n, &pairs, &mut counts, &mut out);
    out
}

pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
