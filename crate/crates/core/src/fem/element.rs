//! Equispaced Lagrange elements on the reference interval and triangle.

/// Values, reference gradients and reference Hessians of all shape
/// functions at one point. Hessians are stored as `[∂ξξ, ∂ξη, ∂ηη]`.
#[derive(Debug, Clone, Default)]
pub struct Tabulation {
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    pub hessians: Vec<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    dim: usize,
    degree: usize,
    /// Node multi-indices; node `k` sits at `index / degree`.
    nodes: Vec<[usize; 2]>,
    monomials: Vec<[i32; 2]>,
    /// Row `k` holds the monomial coefficients of shape function `k`.
    coeffs: Vec<f64>,
}

impl ReferenceElement {
    pub fn new(dim: usize, degree: usize) -> Self {
        assert!(dim == 1 || dim == 2);
        assert!(degree >= 1);
        let (nodes, monomials): (Vec<[usize; 2]>, Vec<[i32; 2]>) = if dim == 1 {
            (
                (0..=degree).map(|a| [a, 0]).collect(),
                (0..=degree as i32).map(|p| [p, 0]).collect(),
            )
        } else {
            let mut nodes = Vec::new();
            let mut monos = Vec::new();
            for b in 0..=degree {
                for a in 0..=(degree - b) {
                    nodes.push([a, b]);
                    monos.push([a as i32, b as i32]);
                }
            }
            (nodes, monos)
        };
        let n = nodes.len();
        // Vandermonde V[k][m] = monomial m at node k; shape coefficients are
        // the columns of V⁻¹.
        let mut vander = vec![0.0; n * n];
        for (k, node) in nodes.iter().enumerate() {
            let x = [
                node[0] as f64 / degree as f64,
                node[1] as f64 / degree as f64,
            ];
            for (m, mono) in monomials.iter().enumerate() {
                vander[k * n + m] = x[0].powi(mono[0]) * x[1].powi(mono[1]);
            }
        }
        let inv = invert(&vander, n);
        let mut coeffs = vec![0.0; n * n];
        for k in 0..n {
            for m in 0..n {
                coeffs[k * n + m] = inv[m * n + k];
            }
        }
        ReferenceElement {
            dim,
            degree,
            nodes,
            monomials,
            coeffs,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_indices(&self) -> &[[usize; 2]] {
        &self.nodes
    }

    pub fn node_coords(&self, k: usize) -> [f64; 2] {
        let r = self.degree as f64;
        [self.nodes[k][0] as f64 / r, self.nodes[k][1] as f64 / r]
    }

    pub fn tabulate(&self, xi: [f64; 2]) -> Tabulation {
        let mut tab = Tabulation::default();
        self.tabulate_into(xi, &mut tab);
        tab
    }

    pub fn tabulate_into(&self, xi: [f64; 2], tab: &mut Tabulation) {
        let n = self.nodes.len();
        // monomial values and derivatives
        let mut mv = vec![0.0; n];
        let mut mg = vec![[0.0; 2]; n];
        let mut mh = vec![[0.0; 3]; n];
        for (m, &[p, q]) in self.monomials.iter().enumerate() {
            let xp = |e: i32| if e < 0 { 0.0 } else { xi[0].powi(e) };
            let yq = |e: i32| if e < 0 { 0.0 } else { xi[1].powi(e) };
            let (pf, qf) = (p as f64, q as f64);
            mv[m] = xp(p) * yq(q);
            mg[m] = [pf * xp(p - 1) * yq(q), qf * xp(p) * yq(q - 1)];
            mh[m] = [
                pf * (pf - 1.0) * xp(p - 2) * yq(q),
                pf * qf * xp(p - 1) * yq(q - 1),
                qf * (qf - 1.0) * xp(p) * yq(q - 2),
            ];
        }
        tab.values.clear();
        tab.grads.clear();
        tab.hessians.clear();
        for k in 0..n {
            let row = &self.coeffs[k * n..(k + 1) * n];
            let mut v = 0.0;
            let mut g = [0.0; 2];
            let mut h = [0.0; 3];
            for m in 0..n {
                let c = row[m];
                v += c * mv[m];
                g[0] += c * mg[m][0];
                g[1] += c * mg[m][1];
                h[0] += c * mh[m][0];
                h[1] += c * mh[m][1];
                h[2] += c * mh[m][2];
            }
            tab.values.push(v);
            tab.grads.push(g);
            tab.hessians.push(h);
        }
    }
}

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
fn invert(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if pivot != col {
            for c in 0..n {
                m.swap(col * n + c, pivot * n + c);
                inv.swap(col * n + c, pivot * n + c);
            }
        }
        let d = m[col * n + col];
        assert!(d.abs() > 1e-14, "singular Vandermonde matrix");
        for c in 0..n {
            m[col * n + c] /= d;
            inv[col * n + c] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                if f != 0.0 {
                    for c in 0..n {
                        m[r * n + c] -= f * m[col * n + c];
                        inv[r * n + c] -= f * inv[col * n + c];
                    }
                }
            }
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_counts() {
        for r in 1..=4 {
            assert_eq!(ReferenceElement::new(1, r).n_nodes(), r + 1);
            assert_eq!(ReferenceElement::new(2, r).n_nodes(), (r + 1) * (r + 2) / 2);
        }
    }

    #[test]
    fn kronecker_property_and_partition_of_unity() {
        for dim in [1, 2] {
            for r in 1..=4 {
                let el = ReferenceElement::new(dim, r);
                for k in 0..el.n_nodes() {
                    let tab = el.tabulate(el.node_coords(k));
                    for (i, v) in tab.values.iter().enumerate() {
                        let expected = if i == k { 1.0 } else { 0.0 };
                        assert!((v - expected).abs() < 1e-12);
                    }
                }
                let tab = el.tabulate([0.2137, if dim == 2 { 0.3311 } else { 0.0 }]);
                let sum: f64 = tab.values.iter().sum();
                let gsum = tab.grads.iter().fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
                let hsum: f64 = tab.hessians.iter().map(|h| h[0].abs() + h[1].abs() + h[2].abs()).sum::<f64>();
                assert!((sum - 1.0).abs() < 1e-12);
                assert!(gsum[0].abs() < 1e-10 && gsum[1].abs() < 1e-10);
                // Σ φ_k = 1 has zero Hessian, so the signed sum vanishes.
                let hs = tab.hessians.iter().fold([0.0; 3], |a, h| [a[0] + h[0], a[1] + h[1], a[2] + h[2]]);
                assert!(hs.iter().all(|v| v.abs() < 1e-8), "{hs:?} (scale {hsum})");
            }
        }
    }

    #[test]
    fn reproduces_quadratic_derivatives() {
        // Σ f(x_k) ∂²φ_k = ∂² f for f = x² + 3xy - y² at degree 2.
        let el = ReferenceElement::new(2, 2);
        let tab = el.tabulate([0.3, 0.25]);
        let mut h = [0.0; 3];
        let mut g = [0.0; 2];
        for k in 0..el.n_nodes() {
            let [x, y] = el.node_coords(k);
            let f = x * x + 3.0 * x * y - y * y;
            g[0] += f * tab.grads[k][0];
            g[1] += f * tab.grads[k][1];
            for c in 0..3 {
                h[c] += f * tab.hessians[k][c];
            }
        }
        assert!((g[0] - (2.0 * 0.3 + 3.0 * 0.25)).abs() < 1e-12);
        assert!((g[1] - (3.0 * 0.3 - 2.0 * 0.25)).abs() < 1e-12);
        assert!((h[0] - 2.0).abs() < 1e-10);
        assert!((h[1] - 3.0).abs() < 1e-10);
        assert!((h[2] + 2.0).abs() < 1e-10);
    }
}
