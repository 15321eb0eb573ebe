//! Assembly of the total velocity field
//! `v(t,x) = u(t,x) + sum_k gamma_k K(x - h_k)` with fast bulk evaluation
//! of the smooth part `u = K * omega` (direct Kahan summation or a
//! Barnes-Hut quadtree with monopole moments).

use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::kernels::{biot_savart_k, blob_kernel};
use crate::real::Real;
use crate::state::{MassiveVortex, ParticleCloud};
use crate::vec2::{KahanVec2, Vec2};

const LEAF_CAPACITY: usize = 16;
const MAX_DEPTH: usize = 48;

/// Read-only view of the sources making up the field at one instant.
#[derive(Clone, Copy)]
pub struct VelocityField<'a, R: Real = f64> {
    pub cloud: &'a ParticleCloud<R>,
    pub vortices: &'a [MassiveVortex<R>],
    /// Barnes-Hut opening angle; 0 selects direct summation.
    pub theta: R,
    /// Blob radius for particle-particle interactions.
    pub sigma: R,
}

impl<'a, R: Real> VelocityField<'a, R> {
    pub fn new(
        cloud: &'a ParticleCloud<R>,
        vortices: &'a [MassiveVortex<R>],
        theta: R,
        sigma: R,
    ) -> Self {
        Self {
            cloud,
            vortices,
            theta,
            sigma,
        }
    }

    /// Smooth part `u(x) = sum_i gamma_i K_blob(x - x_i)` at many targets.
    pub fn eval_u(&self, targets: &[Vec2<R>]) -> Vec<Vec2<R>> {
        if self.cloud.is_empty() || targets.is_empty() {
            return vec![Vec2::zero(); targets.len()];
        }
        if self.theta > R::zero() {
            let tree = QuadTree::build(&self.cloud.positions, &self.cloud.weights);
            targets
                .par_iter()
                .map(|&x| tree.eval(x, self.theta, self.sigma))
                .collect()
        } else {
            targets.par_iter().map(|&x| self.eval_u_direct(x)).collect()
        }
    }

    /// Direct Kahan-compensated blob sum at one point.
    pub fn eval_u_direct(&self, x: Vec2<R>) -> Vec2<R> {
        let mut acc = KahanVec2::new();
        for (p, w) in self.cloud.positions.iter().zip(&self.cloud.weights) {
            acc.add(blob_kernel(x - *p, self.sigma) * *w);
        }
        acc.value()
    }

    /// Total field `v = u + sum_k gamma_k K(x - h_k)`. Targets must avoid
    /// the vortex positions; the singular self-term is never excluded here.
    pub fn eval_v(&self, targets: &[Vec2<R>]) -> Result<Vec<Vec2<R>>> {
        for &x in targets {
            for (k, v) in self.vortices.iter().enumerate() {
                if x == v.h {
                    return Err(SimError::EvaluationAtVortex { index: k });
                }
            }
        }
        let mut out = self.eval_u(targets);
        for (o, &x) in out.iter_mut().zip(targets) {
            for v in self.vortices {
                *o += biot_savart_k(x - v.h)? * v.gamma;
            }
        }
        Ok(out)
    }

    /// The field seen by vortex `k`: `u(h_k)` plus the other vortices'
    /// singular kernels, its own excluded. `u(h_k)` always uses the direct
    /// sum (a handful of targets; keeps vortex forcing independent of the
    /// treecode tolerance).
    pub fn eval_rhs_vortex(&self, k: usize) -> Result<Vec2<R>> {
        let hk = self.vortices[k].h;
        let mut out = self.eval_u_direct(hk);
        for (j, v) in self.vortices.iter().enumerate() {
            if j == k {
                continue;
            }
            let d = hk - v.h;
            if d.norm_sq() == R::zero() {
                return Err(SimError::CoincidentVortices { i: k, j });
            }
            out += biot_savart_k(d)? * v.gamma;
        }
        Ok(out)
    }
}

struct Node<R> {
    center: Vec2<R>,
    half: R,
    /// Circulation-weighted centroid (|gamma| weights).
    com: Vec2<R>,
    gamma: R,
    /// Distance from the geometric center to the centroid; widens the
    /// opening criterion for skewed nodes.
    com_offset: R,
    /// Leaf: particle range into `order`. Internal: child node range.
    first: u32,
    count: u32,
    children: u32, // index of first child, 0 if leaf
}

/// Barnes-Hut quadtree over the particle set, rebuilt per evaluation.
pub struct QuadTree<'a, R> {
    nodes: Vec<Node<R>>,
    order: Vec<u32>,
    positions: &'a [Vec2<R>],
    weights: &'a [R],
}

impl<'a, R: Real> QuadTree<'a, R> {
    pub fn build(positions: &'a [Vec2<R>], weights: &'a [R]) -> Self {
        assert_eq!(positions.len(), weights.len());
        let n = positions.len();
        let mut order: Vec<u32> = (0..n as u32).collect();

        // Root square around all particles.
        let mut lo = Vec2::new(R::infinity(), R::infinity());
        let mut hi = Vec2::new(R::neg_infinity(), R::neg_infinity());
        for p in positions {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        let center = (lo + hi) * R::lit(0.5);
        let half = ((hi.x - lo.x).max(hi.y - lo.y) * R::lit(0.5)).max(R::min_positive_value());

        let mut tree = Self {
            nodes: Vec::with_capacity(2 * n.max(1)),
            order: Vec::new(),
            positions,
            weights,
        };
        tree.nodes.push(Node {
            center,
            half,
            com: center,
            com_offset: R::zero(),
            gamma: R::zero(),
            first: 0,
            count: n as u32,
            children: 0,
        });
        tree.subdivide(0, &mut order, 0, n, 0);
        tree.order = order;
        tree
    }

    fn subdivide(&mut self, node: usize, order: &mut [u32], start: usize, end: usize, depth: usize) {
        let count = end - start;
        let (center, half) = (self.nodes[node].center, self.nodes[node].half);

        // Moments.
        let mut gamma = R::zero();
        let mut wsum = R::zero();
        let mut com = Vec2::zero();
        for &i in &order[start..end] {
            let w = self.weights[i as usize];
            gamma += w;
            let aw = w.abs();
            wsum += aw;
            com += self.positions[i as usize] * aw;
        }
        self.nodes[node].gamma = gamma;
        let com = if wsum > R::zero() { com / wsum } else { center };
        self.nodes[node].com = com;
        self.nodes[node].com_offset = com.dist(center);
        self.nodes[node].first = start as u32;
        self.nodes[node].count = count as u32;

        if count <= LEAF_CAPACITY || depth >= MAX_DEPTH {
            return; // leaf
        }

        // Partition into quadrants (stable, via scratch buffer).
        let quadrant = |p: Vec2<R>| -> usize {
            (usize::from(p.x >= center.x)) | (usize::from(p.y >= center.y) << 1)
        };
        let mut buckets: [Vec<u32>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        for &i in &order[start..end] {
            buckets[quadrant(self.positions[i as usize])].push(i);
        }
        let qh = half * R::lit(0.5);
        let offsets = [
            Vec2::new(-qh, -qh),
            Vec2::new(qh, -qh),
            Vec2::new(-qh, qh),
            Vec2::new(qh, qh),
        ];

        let first_child = self.nodes.len();
        self.nodes[node].children = first_child as u32;
        for q in 0..4 {
            self.nodes.push(Node {
                center: center + offsets[q],
                half: qh,
                com: Vec2::zero(),
                com_offset: R::zero(),
                gamma: R::zero(),
                first: 0,
                count: 0,
                children: 0,
            });
        }

        let mut cursor = start;
        let mut ranges = [(0usize, 0usize); 4];
        for q in 0..4 {
            let b = &buckets[q];
            order[cursor..cursor + b.len()].copy_from_slice(b);
            ranges[q] = (cursor, cursor + b.len());
            cursor += b.len();
        }
        for q in 0..4 {
            let (s, e) = ranges[q];
            if e > s {
                self.subdivide(first_child + q, order, s, e, depth + 1);
            } else {
                self.nodes[first_child + q].first = s as u32;
            }
        }
    }

    /// Velocity induced at `x` under opening angle `theta`.
    pub fn eval(&self, x: Vec2<R>, theta: R, sigma: R) -> Vec2<R> {
        let mut acc = KahanVec2::new();
        let mut stack: Vec<u32> = vec![0];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if node.count == 0 {
                continue;
            }
            let d = x - node.com;
            let d2 = d.norm_sq();
            let size = node.half + node.half + node.com_offset + node.com_offset;
            if node.children != 0 && size * size < theta * theta * d2 {
                acc.add(blob_kernel(d, sigma) * node.gamma);
            } else if node.children == 0 {
                let s = node.first as usize;
                let e = s + node.count as usize;
                for &i in &self.order[s..e] {
                    acc.add(
                        blob_kernel(x - self.positions[i as usize], sigma)
                            * self.weights[i as usize],
                    );
                }
            } else {
                for q in 0..4 {
                    stack.push(node.children + q);
                }
            }
        }
        acc.value()
    }
}
