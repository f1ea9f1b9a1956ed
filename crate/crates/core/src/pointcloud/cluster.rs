use std::collections::VecDeque;

use super::spatial::KdTree;
use super::{LidarPoint, PointCloud};
use crate::frames::WorldPoint;

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Indices into the clustered cloud, ascending.
    pub indices: Vec<usize>,
    pub centroid: WorldPoint,
}

impl Cluster {
    pub fn from_indices(mut indices: Vec<usize>, points: &[LidarPoint]) -> Self {
        indices.sort_unstable();
        let n = indices.len().max(1) as f64;
        let (sx, sy, sz) = indices.iter().fold((0.0, 0.0, 0.0), |(x, y, z), &i| {
            (x + points[i].x, y + points[i].y, z + points[i].z)
        });
        Self {
            indices,
            centroid: WorldPoint::new(sx / n, sy / n, sz / n),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn points<'a>(&'a self, points: &'a [LidarPoint]) -> impl Iterator<Item = LidarPoint> + 'a {
        self.indices.iter().map(move |&i| points[i])
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DbscanResult {
    /// Ordered by smallest member index.
    pub clusters: Vec<Cluster>,
    pub noise: Vec<usize>,
}

/// Density-based clustering.
///
/// A point is core when at least `min_pts` points (itself included) lie
/// within `eps`. Core points within `eps` of each other share a cluster.
/// Every non-core point within `eps` of some core point joins the cluster of
/// its nearest such core point (lowest index on ties); all others are noise.
/// The border rule makes the partition independent of input order.
pub fn dbscan(cloud: &PointCloud, eps: f64, min_pts: usize) -> DbscanResult {
    let pts = &cloud.points;
    if pts.is_empty() {
        return DbscanResult::default();
    }
    let tree = KdTree::new(pts.iter().map(|p| p.xyz()).collect());
    let neighbors: Vec<Vec<usize>> = pts.iter().map(|p| tree.within(&p.xyz(), eps)).collect();
    let core: Vec<bool> = neighbors.iter().map(|n| n.len() >= min_pts).collect();

    const UNSET: usize = usize::MAX;
    let mut label = vec![UNSET; pts.len()];
    let mut n_clusters = 0;
    let mut queue = VecDeque::new();
    for seed in 0..pts.len() {
        if !core[seed] || label[seed] != UNSET {
            continue;
        }
        label[seed] = n_clusters;
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            for &j in &neighbors[i] {
                if core[j] && label[j] == UNSET {
                    label[j] = n_clusters;
                    queue.push_back(j);
                }
            }
        }
        n_clusters += 1;
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    let mut noise = Vec::new();
    for i in 0..pts.len() {
        let l = if core[i] {
            label[i]
        } else {
            neighbors[i]
                .iter()
                .filter(|&&j| core[j])
                .min_by(|&&a, &&b| pts[i].dist2(&pts[a]).total_cmp(&pts[i].dist2(&pts[b])).then(a.cmp(&b)))
                .map_or(UNSET, |&j| label[j])
        };
        if l == UNSET {
            noise.push(i);
        } else {
            members[l].push(i);
        }
    }
    let mut clusters: Vec<Cluster> = members.into_iter().map(|m| Cluster::from_indices(m, pts)).collect();
    clusters.sort_by_key(|c| c.indices[0]);
    DbscanResult { clusters, noise }
}

/// Bottom-up merging: while the closest pair of clusters (centroid distance)
/// is nearer than `merge_dist`, merge it, the lower-index cluster absorbing
/// the other. Ties go to the lexicographically smallest index pair.
pub fn agglomerative_merge(clusters: Vec<Cluster>, points: &[LidarPoint], merge_dist: f64) -> Vec<Cluster> {
    let mut clusters = clusters;
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = clusters[i].centroid.distance(&clusters[j].centroid);
                if best.is_none_or(|b| d < b.0) {
                    best = Some((d, i, j));
                }
            }
        }
        match best {
            Some((d, i, j)) if d < merge_dist => {
                let absorbed = clusters.remove(j);
                let mut indices = std::mem::take(&mut clusters[i].indices);
                indices.extend(absorbed.indices);
                clusters[i] = Cluster::from_indices(indices, points);
            }
            _ => return clusters,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::FrameTag;
    use super::*;

    fn pc(points: Vec<LidarPoint>) -> PointCloud {
        PointCloud::new(FrameTag::World, 0.0, points)
    }

    fn p2(x: f64, y: f64) -> LidarPoint {
        LidarPoint::new(x, y, 0.0, 1.0)
    }

    #[test]
    fn small_cluster_and_noise() {
        let cloud = pc(vec![p2(0.0, 0.0), p2(0.1, 0.0), p2(0.2, 0.0), p2(10.0, 10.0)]);
        let res = dbscan(&cloud, 0.3, 3);
        assert_eq!(res.clusters.len(), 1);
        assert_eq!(res.clusters[0].indices, vec![0, 1, 2]);
        assert_eq!(res.noise, vec![3]);
        assert!((res.clusters[0].centroid.x - 0.1).abs() < 1e-12);
    }

    #[test]
    fn empty_cloud() {
        let res = dbscan(&pc(vec![]), 1.0, 3);
        assert!(res.clusters.is_empty() && res.noise.is_empty());
    }

    #[test]
    fn border_point_joins_nearest_core() {
        // Cores are x=0.3 (left) and x=1.3, 1.4 (right); x=0.85 reaches both
        // but is not core itself, and 1.3 is nearer.
        let mut pts: Vec<_> = [0.0, 0.1, 0.2, 0.3, 1.3, 1.4, 1.5, 1.6]
            .iter()
            .map(|&x| p2(x, 0.0))
            .collect();
        pts.push(p2(0.85, 0.0));
        let res = dbscan(&pc(pts), 0.6, 5);
        assert_eq!(res.clusters.len(), 2);
        assert!(res.clusters[1].indices.contains(&8));
    }

    #[test]
    fn merge_close_pair() {
        let pts = vec![p2(0.0, 0.0), p2(0.5, 0.0)];
        let clusters = vec![
            Cluster::from_indices(vec![0], &pts),
            Cluster::from_indices(vec![1], &pts),
        ];
        let merged = agglomerative_merge(clusters, &pts, 1.5);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].indices, vec![0, 1]);
    }

    #[test]
    fn no_merge_when_far() {
        let pts = vec![p2(0.0, 0.0), p2(5.0, 0.0)];
        let clusters = vec![
            Cluster::from_indices(vec![0], &pts),
            Cluster::from_indices(vec![1], &pts),
        ];
        assert_eq!(agglomerative_merge(clusters, &pts, 1.5).len(), 2);
    }

    #[test]
    fn collinear_merge_sequence() {
        // Equal-mass clusters at x = 0, 1, 3: {0,1} merge to 0.5, which is
        // 2.5 m from the third, so merging stops with two clusters.
        let pts = vec![p2(0.0, 0.0), p2(1.0, 0.0), p2(3.0, 0.0)];
        let clusters = (0..3).map(|i| Cluster::from_indices(vec![i], &pts)).collect();
        let merged = agglomerative_merge(clusters, &pts, 1.5);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].indices, vec![0, 1]);
        assert!((merged[0].centroid.x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unequal_masses_change_outcome() {
        // Cluster at x=1 is heavy, so the merged centroid stays at 0.9 and
        // lands within 1.5 m of the cluster at 2.3; equal masses would not.
        let mut pts = vec![p2(0.0, 0.0)];
        pts.extend((0..9).map(|_| p2(1.0, 0.0)));
        pts.push(p2(2.3, 0.0));
        let clusters = vec![
            Cluster::from_indices(vec![0], &pts),
            Cluster::from_indices((1..10).collect(), &pts),
            Cluster::from_indices(vec![10], &pts),
        ];
        let merged = agglomerative_merge(clusters, &pts, 1.5);
        assert_eq!(merged.len(), 1);
    }
}
