//! Metrics on a configuration space and the curvature data the geodesic
//! Jacobi equation needs.

use std::collections::HashMap;

use thiserror::Error;

use crate::expr::{Expr, ExprError, Symbol};
use crate::jet::{JetBundle, JetError, MultiIndex};
use crate::lift::{LiftError, VariationField};
use crate::secondvar::JacobiSystem;
use crate::varcalc::{Lagrangian, VarError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("metric is singular")]
    Singular,
    #[error("metric is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("metric has {rows} rows but {n} coordinates")]
    Shape { rows: usize, n: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Var(#[from] VarError),
}

/// `g_ij(q)` in named coordinates.
#[derive(Clone, Debug)]
pub struct Metric {
    pub coords: Vec<String>,
    pub g: Vec<Vec<Expr>>,
    /// Coordinates sampled as angles by the numeric oracle.
    pub angles: Vec<String>,
}

pub type Christoffel = Vec<Vec<Vec<Expr>>>;
pub type Curvature = Vec<Vec<Vec<Vec<Expr>>>>;

impl Metric {
    pub fn new(coords: &[&str], g: Vec<Vec<Expr>>) -> Result<Metric, MetricError> {
        let n = coords.len();
        if g.len() != n || g.iter().any(|r| r.len() != n) {
            return Err(MetricError::Shape { rows: g.len(), n });
        }
        for i in 0..n {
            for j in i + 1..n {
                if !g[i][j].same_as(&g[j][i]) {
                    return Err(MetricError::NotSymmetric(i, j));
                }
            }
        }
        Ok(Metric {
            coords: coords.iter().map(|s| s.to_string()).collect(),
            g,
            angles: Vec::new(),
        })
    }

    pub fn euclidean(coords: &[&str]) -> Metric {
        let n = coords.len();
        let g = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect())
            .collect();
        Metric::new(coords, g).expect("identity is a metric")
    }

    pub fn diagonal(coords: &[&str], diag: Vec<Expr>) -> Result<Metric, MetricError> {
        let n = coords.len();
        let g = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i].clone() } else { Expr::zero() }).collect())
            .collect();
        Metric::new(coords, g)
    }

    pub fn with_angles(mut self, angles: &[&str]) -> Metric {
        self.angles = angles.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    fn coord(&self, k: usize) -> Symbol {
        Symbol::new(&self.coords[k])
    }

    pub fn determinant(&self) -> Expr {
        det(&self.g)
    }

    /// `g^{ij}` by cofactors.
    pub fn inverse(&self) -> Result<Vec<Vec<Expr>>, MetricError> {
        let d = self.determinant();
        if d.is_zero() {
            return Err(MetricError::Singular);
        }
        let inv_d = d.inv()?;
        let n = self.n();
        let mut out = vec![vec![Expr::zero(); n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                // (adj g)_ij = cofactor C_ji
                let c = det(&minor(&self.g, j, i));
                let c = if (i + j) % 2 == 0 { c } else { c.neg() };
                *cell = c.mul(&inv_d);
            }
        }
        Ok(out)
    }

    /// `Γ^i_{jk} = ½ g^{il}(∂_j g_{lk} + ∂_k g_{jl} − ∂_l g_{jk})`.
    pub fn christoffel(&self) -> Result<Christoffel, MetricError> {
        let n = self.n();
        let ginv = self.inverse()?;
        let dg: Vec<Vec<Vec<Expr>>> = (0..n)
            .map(|a| (0..n).map(|b| (0..n).map(|c| self.g[a][b].diff(&self.coord(c))).collect()).collect())
            .collect();
        let half = Expr::frac(1, 2);
        let mut out = vec![vec![vec![Expr::zero(); n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let mut acc = Expr::zero();
                    for l in 0..n {
                        if ginv[i][l].is_zero() {
                            continue;
                        }
                        let s = dg[l][k][j].add(&dg[j][l][k]).sub(&dg[j][k][l]);
                        acc = acc.add(&ginv[i][l].mul(&s));
                    }
                    let v = acc.mul(&half);
                    out[i][k][j] = v.clone();
                    out[i][j][k] = v;
                }
            }
        }
        Ok(out)
    }

    /// `R^i_{jkl} = ∂_kΓ^i_{jl} − ∂_lΓ^i_{jk} + Γ^i_{km}Γ^m_{jl} − Γ^i_{lm}Γ^m_{jk}`.
    pub fn riemann_tensor(&self) -> Result<Curvature, MetricError> {
        let n = self.n();
        let gam = self.christoffel()?;
        let mut out = vec![vec![vec![vec![Expr::zero(); n]; n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in k + 1..n {
                        let mut r = gam[i][j][l].diff(&self.coord(k)).sub(&gam[i][j][k].diff(&self.coord(l)));
                        for m in 0..n {
                            r = r
                                .add(&gam[i][k][m].mul(&gam[m][j][l]))
                                .sub(&gam[i][l][m].mul(&gam[m][j][k]));
                        }
                        out[i][j][l][k] = r.neg();
                        out[i][j][k][l] = r;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Mechanics bundle `ℝ×Q → ℝ` over `t`, of the given jet order.
    pub fn bundle(&self, order: usize) -> Result<JetBundle, MetricError> {
        let names: Vec<&str> = self.coords.iter().map(String::as_str).collect();
        Ok(JetBundle::new(&["t"], &names, order)?.with_angles(&self.angles))
    }

    /// `λ = ½ g_ij q̇^i q̇^j dt`.
    pub fn geodesic_energy(&self) -> Result<Lagrangian, MetricError> {
        let b = self.bundle(1)?;
        let t = MultiIndex::unit(1, 0);
        let n = self.n();
        let mut l = Expr::zero();
        for i in 0..n {
            for j in 0..n {
                l = l.add(&self.g[i][j].mul(&b.field_expr(i, &t)).mul(&b.field_expr(j, &t)));
            }
        }
        Ok(Lagrangian::new(b, l.mul(&Expr::frac(1, 2)))?)
    }

    /// Default fiber names for the complete lift: `u1..un`.
    pub fn lift_names(&self) -> Vec<String> {
        (1..=self.n()).map(|k| format!("u{k}")).collect()
    }

    /// `g^C` on `(q, u)`: blocks `[[(∂_k g_ij) u^k, g], [g, 0]]`.
    pub fn complete_lift(&self) -> Result<Metric, MetricError> {
        let names = self.lift_names();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        self.complete_lift_named(&names)
    }

    pub fn complete_lift_named(&self, u: &[&str]) -> Result<Metric, MetricError> {
        let n = self.n();
        let mut g = vec![vec![Expr::zero(); 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                let mut d = Expr::zero();
                for (k, uk) in u.iter().enumerate() {
                    d = d.add(&self.g[i][j].diff(&self.coord(k)).mul(&Expr::sym(uk)));
                }
                g[i][j] = d;
                g[i][n + j] = self.g[i][j].clone();
                g[n + i][j] = self.g[i][j].clone();
            }
        }
        let coords: Vec<&str> = self.coords.iter().map(String::as_str).chain(u.iter().copied()).collect();
        let angles: Vec<&str> = self.angles.iter().map(String::as_str).collect();
        Ok(Metric::new(&coords, g)?.with_angles(&angles))
    }

    /// Second-order system: accelerations `q̈^i = −Γ^i_{jk} q̇^j q̇^k` as a
    /// substitution on `bundle`.
    pub fn geodesic_substitution(&self, bundle: &JetBundle) -> Result<HashMap<Symbol, Expr>, MetricError> {
        let gam = self.christoffel()?;
        let t = MultiIndex::unit(1, 0);
        let tt = MultiIndex::from_counts(vec![2]);
        let n = self.n();
        let mut map = HashMap::new();
        for (i, gi) in gam.iter().enumerate() {
            let mut a = Expr::zero();
            for j in 0..n {
                for k in 0..n {
                    a = a.sub(&gi[j][k].mul(&bundle.field_expr(j, &t)).mul(&bundle.field_expr(k, &t)));
                }
            }
            map.insert(bundle.field_symbol(i, &tt), a);
        }
        Ok(map)
    }

    /// `∇²_γ̇ η + R(η, γ̇)γ̇` with `q̈` eliminated along the geodesic flow.
    pub fn covariant_jacobi(&self) -> Result<CovariantJacobi, MetricError> {
        let b = self.bundle(2)?;
        let eta = VariationField::adjoin_default(&b)?;
        let p = &eta.bundle;
        let n = self.n();
        let gam = self.christoffel()?;
        let riem = self.riemann_tensor()?;
        let t = MultiIndex::unit(1, 0);
        let qd: Vec<Expr> = (0..n).map(|i| p.field_expr(i, &t)).collect();
        let e: Vec<Expr> = eta.components.clone();
        let ed: Vec<Expr> = (0..n).map(|i| eta.jet(i, &t)).collect::<Result<_, _>>()?;
        // ∇_γ̇ η
        let v: Vec<Expr> = (0..n)
            .map(|i| {
                let mut s = ed[i].clone();
                for j in 0..n {
                    for k in 0..n {
                        s = s.add(&gam[i][j][k].mul(&qd[j]).mul(&e[k]));
                    }
                }
                s
            })
            .collect();
        let sub = self.geodesic_substitution(p)?;
        let mut out = Vec::new();
        for i in 0..n {
            let mut c = p.total_derivative(&v[i], 0)?;
            for j in 0..n {
                for k in 0..n {
                    c = c.add(&gam[i][j][k].mul(&qd[j]).mul(&v[k]));
                    for l in 0..n {
                        c = c.add(&riem[i][j][k][l].mul(&qd[j]).mul(&e[k]).mul(&qd[l]));
                    }
                }
            }
            out.push(c.substitute(&sub)?);
        }
        Ok(CovariantJacobi {
            eta,
            system: JacobiSystem { components: out },
        })
    }

    /// `g_ij v^j`.
    pub fn lower(&self, v: &[Expr]) -> Vec<Expr> {
        self.g
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a.mul(b)).sum())
            .collect()
    }
}

/// Covariant Jacobi operator together with the variation it acts on.
#[derive(Clone, Debug)]
pub struct CovariantJacobi {
    pub eta: VariationField,
    pub system: JacobiSystem,
}

fn minor(m: &[Vec<Expr>], r: usize, c: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, x)| x.clone()).collect())
        .collect()
}

/// Laplace expansion along the first row.
fn det(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0])),
        n => {
            let mut acc = Expr::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let t = m[0][j].mul(&det(&minor(m, 0, j)));
                acc = if j % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
            }
            acc
        }
    }
}
