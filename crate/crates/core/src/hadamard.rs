//! Normalized Hadamard matrices up to order 64.
//!
//! Orders are covered by Sylvester doubling, the Paley type-I construction
//! over GF(q) for q ≡ 3 (mod 4), and the Paley type-II construction for
//! q ≡ 1 (mod 4), with q a prime or the square of a prime (order 52 needs
//! GF(25)). Every result is normalized to an all-ones first row and column.

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 64;

/// Square ±1 matrix as nested rows.
type Mat = Vec<Vec<i8>>;

/// Finite field GF(p) or GF(p²) with elements indexed 0..q.
struct Field {
    q: usize,
    add: Vec<Vec<usize>>,
    mul: Vec<Vec<usize>>,
}

impl Field {
    fn prime(p: usize) -> Field {
        let add = (0..p).map(|a| (0..p).map(|b| (a + b) % p).collect()).collect();
        let mul = (0..p).map(|a| (0..p).map(|b| (a * b) % p).collect()).collect();
        Field { q: p, add, mul }
    }

    /// GF(p²) as a + b·t with t² = r for a quadratic non-residue r mod p.
    fn prime_squared(p: usize) -> Field {
        let is_square = |x: usize| (0..p).any(|y| (y * y) % p == x);
        let r = (2..p).find(|&x| !is_square(x)).expect("non-residue exists for odd p");
        let q = p * p;
        let enc = |a: usize, b: usize| a + p * b;
        let mut add = vec![vec![0; q]; q];
        let mut mul = vec![vec![0; q]; q];
        for a1 in 0..p {
            for b1 in 0..p {
                for a2 in 0..p {
                    for b2 in 0..p {
                        let x = enc(a1, b1);
                        let y = enc(a2, b2);
                        add[x][y] = enc((a1 + a2) % p, (b1 + b2) % p);
                        // (a1 + b1 t)(a2 + b2 t) = a1a2 + r·b1b2 + (a1b2 + a2b1) t
                        mul[x][y] =
                            enc((a1 * a2 + r * b1 * b2) % p, (a1 * b2 + a2 * b1) % p);
                    }
                }
            }
        }
        Field { q, add, mul }
    }

    fn neg(&self, x: usize) -> usize {
        (0..self.q).find(|&y| self.add[x][y] == 0).unwrap()
    }

    /// Quadratic character: 0 at zero, +1 on nonzero squares, −1 otherwise.
    fn chi(&self) -> Vec<i8> {
        let mut chi = vec![-1i8; self.q];
        chi[0] = 0;
        for x in 1..self.q {
            chi[self.mul[x][x]] = 1;
        }
        chi
    }
}

fn field_for(q: usize) -> Option<Field> {
    if q < 2 {
        return None;
    }
    let is_prime = |n: usize| n >= 2 && (2..=n.isqrt()).all(|d| n % d != 0);
    if is_prime(q) {
        return Some(Field::prime(q));
    }
    let s = q.isqrt();
    if s * s == q && is_prime(s) && s % 2 == 1 {
        return Some(Field::prime_squared(s));
    }
    None
}

/// Jacobsthal matrix Q with Q_ij = χ(a_i − a_j).
fn jacobsthal(f: &Field) -> Mat {
    let chi = f.chi();
    let q = f.q;
    (0..q)
        .map(|i| (0..q).map(|j| chi[f.add[i][f.neg(j)]]).collect())
        .collect()
}

/// Paley I: order q+1 for q ≡ 3 (mod 4). H = I + S with
/// S = [[0, 1ᵀ], [−1, Q]].
fn paley_type1(f: &Field) -> Mat {
    let q = f.q;
    let qm = jacobsthal(f);
    let n = q + 1;
    let mut h = vec![vec![0i8; n]; n];
    h[0][0] = 1;
    for j in 1..n {
        h[0][j] = 1;
        h[j][0] = -1;
    }
    for i in 1..n {
        for j in 1..n {
            h[i][j] = if i == j { 1 } else { qm[i - 1][j - 1] };
        }
    }
    h
}

/// Paley II: order 2(q+1) for q ≡ 1 (mod 4). With the symmetric conference
/// core C = [[0, 1ᵀ], [1, Q]], each entry c expands to the 2×2 block
/// [[1,1],[1,−1]]·c for c ≠ 0 and [[1,−1],[−1,−1]] on the diagonal zeros.
fn paley_type2(f: &Field) -> Mat {
    let q = f.q;
    let qm = jacobsthal(f);
    let s = q + 1;
    let mut c = vec![vec![0i8; s]; s];
    for j in 1..s {
        c[0][j] = 1;
        c[j][0] = 1;
    }
    for i in 1..s {
        for j in 1..s {
            c[i][j] = qm[i - 1][j - 1];
        }
    }
    let n = 2 * s;
    let mut h = vec![vec![0i8; n]; n];
    for i in 0..s {
        for j in 0..s {
            let (a, b, cc, d) = if i == j {
                (1, -1, -1, -1)
            } else {
                let v = c[i][j];
                (v, v, v, -v)
            };
            h[2 * i][2 * j] = a;
            h[2 * i][2 * j + 1] = b;
            h[2 * i + 1][2 * j] = cc;
            h[2 * i + 1][2 * j + 1] = d;
        }
    }
    h
}

fn sylvester_double(h: &Mat) -> Mat {
    let n = h.len();
    let mut out = vec![vec![0i8; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = h[i][j];
            out[i][j + n] = h[i][j];
            out[i + n][j] = h[i][j];
            out[i + n][j + n] = -h[i][j];
        }
    }
    out
}

/// Negates columns then rows so the first row and column are all +1.
fn normalize(mut h: Mat) -> Mat {
    let n = h.len();
    for j in 0..n {
        if h[0][j] < 0 {
            for row in h.iter_mut() {
                row[j] = -row[j];
            }
        }
    }
    for row in h.iter_mut() {
        if row[0] < 0 {
            for e in row.iter_mut() {
                *e = -*e;
            }
        }
    }
    h
}

fn build(order: usize) -> Option<Mat> {
    match order {
        1 => return Some(vec![vec![1]]),
        2 => return Some(vec![vec![1, 1], vec![1, -1]]),
        _ => {}
    }
    if order % 4 != 0 {
        return None;
    }
    // Powers of two by Sylvester doubling.
    if order.is_power_of_two() {
        return Some(sylvester_double(&build(order / 2)?));
    }
    // Paley I with q = order − 1 ≡ 3 (mod 4).
    if (order - 1) % 4 == 3 {
        if let Some(f) = field_for(order - 1) {
            return Some(paley_type1(&f));
        }
    }
    // Paley II with q = order/2 − 1 ≡ 1 (mod 4).
    if order % 2 == 0 && (order / 2).wrapping_sub(1) % 4 == 1 {
        if let Some(f) = field_for(order / 2 - 1) {
            return Some(paley_type2(&f));
        }
    }
    // Sylvester doubling of a smaller order.
    if order % 2 == 0 {
        if let Some(hh) = build(order / 2) {
            return Some(sylvester_double(&hh));
        }
    }
    None
}

/// Orders this generator supports.
pub fn supported_orders() -> Vec<usize> {
    let mut v = vec![1, 2];
    v.extend((1..=MAX_ORDER / 4).map(|k| 4 * k).filter(|&o| build(o).is_some()));
    v.sort_unstable();
    v.dedup();
    v
}

/// A normalized Hadamard matrix of the given order: HᵀH = order·I with
/// all-ones first row and column.
pub fn hadamard(order: usize) -> Result<Vec<Vec<i8>>> {
    if order == 0 || order > MAX_ORDER || (order > 2 && order % 4 != 0) {
        return Err(Error::InvalidConfig(format!(
            "unsupported Hadamard order {order}; supported: {:?}",
            supported_orders()
        )));
    }
    let h = build(order).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "unsupported Hadamard order {order}; supported: {:?}",
            supported_orders()
        ))
    })?;
    let h = normalize(h);
    debug_assert!(verify(&h));
    Ok(h)
}

fn verify(h: &Mat) -> bool {
    let n = h.len();
    for i in 0..n {
        for j in 0..n {
            let dot: i64 = (0..n).map(|k| h[i][k] as i64 * h[j][k] as i64).sum();
            let want = if i == j { n as i64 } else { 0 };
            if dot != want {
                return false;
            }
        }
    }
    true
}
