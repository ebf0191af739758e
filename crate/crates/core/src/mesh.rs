//! Triangulated closed hyperbolic surfaces: a regular 4g-gon in the Poincaré
//! disk with opposite sides glued, refined by geodesic midpoint subdivision.
//! Vertex areas are circumcentric dual areas.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::disk::{self, Mobius};
use crate::error::{Error, Result};
use crate::linalg::Csr;

pub const DEFAULT_VERTEX_BUDGET: usize = 200_000;
/// Smallest admissible hyperbolic triangle angle, in degrees.
pub const MIN_ANGLE_DEG: f64 = 10.0;
const MIN_FACE_AREA: f64 = 1e-14;
const MATCH_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FundamentalDomain {
    pub genus: usize,
    /// Corners `v_0 .. v_{4g-1}` counter-clockwise; side `k` joins `v_k` and `v_{k+1}`.
    pub polygon_vertices: Vec<C64>,
    /// `side_pairings[k]` maps side `k` onto side `k + 2g`.
    pub side_pairings: Vec<Mobius>,
}

impl FundamentalDomain {
    pub fn regular(genus: usize) -> Result<Self> {
        if genus < 2 {
            return Err(Error::InvalidParameter(format!("genus must be >= 2, got {genus}")));
        }
        let n = 4 * genus;
        let radius = circumradius(genus);
        let r = (0.5 * radius).tanh();
        let polygon_vertices = (0..n)
            .map(|k| C64::from_polar(r, 2.0 * PI * k as f64 / n as f64))
            .collect();
        let half = (1.0 / (PI / n as f64).tan()).acosh();
        let side_pairings = (0..2 * genus)
            .map(|k| {
                let phi = (2 * k + 1) as f64 * PI / n as f64;
                Mobius::translation(phi + PI, 2.0 * half)
            })
            .collect();
        Ok(FundamentalDomain {
            genus,
            polygon_vertices,
            side_pairings,
        })
    }

    pub fn sides(&self) -> usize {
        self.polygon_vertices.len()
    }

    pub fn interior_angle(&self, k: usize) -> f64 {
        let n = self.sides();
        let v = &self.polygon_vertices;
        disk::angle_at(v[k], v[(k + 1) % n], v[(k + n - 1) % n])
    }
}

/// Hyperbolic angle at a corner of the regular `n`-gon of circumradius `radius`.
fn corner_angle(n: usize, radius: f64) -> f64 {
    let r = (0.5 * radius).tanh();
    let v = |k: usize| C64::from_polar(r, 2.0 * PI * k as f64 / n as f64);
    disk::angle_at(v(0), v(1), v(n - 1))
}

/// Circumradius of the regular 4g-gon with corner angle π/(2g), by bisection.
pub fn circumradius(genus: usize) -> f64 {
    let n = 4 * genus;
    let target = PI / (2 * genus) as f64;
    let (mut lo, mut hi) = (1e-3, 20.0);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        // the corner angle shrinks as the polygon grows
        if corner_angle(n, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A non-representative copy of a mesh vertex on the polygon boundary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Identification {
    pub vertex: usize,
    pub copy: C64,
    /// Deck transformation taking the representative position to `copy`.
    pub map: Mobius,
}

#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    pub genus: usize,
    pub resolution: usize,
    pub domain: FundamentalDomain,
    /// Representative position of each vertex.
    pub vertices: Vec<C64>,
    pub faces: Vec<[usize; 3]>,
    /// Position of each face corner in the face's own chart.
    pub corner_positions: Vec<[C64; 3]>,
    /// `g'(z)/|g'(z)|` for the deck map `g` from the representative to the corner copy.
    pub corner_rotations: Vec<[C64; 3]>,
    pub identifications: Vec<Identification>,
    /// Undirected edges with `e[0] < e[1]`.
    pub edges: Vec<[usize; 2]>,
    /// Edge from corner `j` to corner `j+1`, and whether the face traverses it forwards.
    pub face_edges: Vec<[(usize, bool); 3]>,
    pub face_areas: Vec<f64>,
    pub face_angles: Vec<[f64; 3]>,
    pub edge_weights: Vec<f64>,
    /// Lumped mass: circumcentric dual areas.
    pub vertex_areas: Vec<f64>,
    pub stiffness: Csr,
}

struct LocalMesh {
    points: Vec<C64>,
    sides: Vec<u64>,
    faces: Vec<[usize; 3]>,
}

fn base_mesh(domain: &FundamentalDomain) -> LocalMesh {
    let n = domain.sides();
    let v = &domain.polygon_vertices;
    // 0 = centre, 1..=n corners, n+1..=2n side midpoints
    let mut points = vec![C64::new(0.0, 0.0)];
    let mut sides = vec![0u64];
    for k in 0..n {
        points.push(v[k]);
        sides.push((1u64 << k) | (1u64 << ((k + n - 1) % n)));
    }
    for k in 0..n {
        points.push(disk::geodesic_midpoint(v[k], v[(k + 1) % n]));
        sides.push(1u64 << k);
    }
    let corner = |k: usize| 1 + k % n;
    let mid = |k: usize| 1 + n + k % n;
    let mut faces = Vec::with_capacity(2 * n);
    for k in 0..n {
        faces.push([0, mid(k), mid(k + 1)]);
        faces.push([mid(k), corner(k + 1), mid(k + 1)]);
    }
    LocalMesh { points, sides, faces }
}

fn refine(mesh: LocalMesh) -> LocalMesh {
    let LocalMesh {
        mut points,
        mut sides,
        faces,
    } = mesh;
    let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, points: &mut Vec<C64>, sides: &mut Vec<u64>| -> usize {
        let key = (a.min(b), a.max(b));
        *cache.entry(key).or_insert_with(|| {
            points.push(disk::geodesic_midpoint(points[key.0], points[key.1]));
            sides.push(sides[a] & sides[b]);
            points.len() - 1
        })
    };
    let mut out = Vec::with_capacity(4 * faces.len());
    for [a, b, c] in faces {
        let ab = midpoint(a, b, &mut points, &mut sides);
        let bc = midpoint(b, c, &mut points, &mut sides);
        let ca = midpoint(c, a, &mut points, &mut sides);
        out.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    LocalMesh {
        points,
        sides,
        faces: out,
    }
}

/// Predicted number of vertices after identification.
pub fn predicted_vertex_count(genus: usize, resolution: usize) -> usize {
    let base_faces = 8 * genus;
    let faces = base_faces.saturating_mul(4usize.saturating_pow(resolution as u32));
    (faces / 2 + 2).saturating_sub(2 * genus)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn build_surface(genus: usize, resolution: usize) -> Result<SurfaceMesh> {
    build_surface_with_budget(genus, resolution, DEFAULT_VERTEX_BUDGET)
}

pub fn build_surface_with_budget(genus: usize, resolution: usize, budget: usize) -> Result<SurfaceMesh> {
    if genus < 2 {
        return Err(Error::InvalidParameter(format!("genus must be >= 2, got {genus}")));
    }
    if genus > 16 {
        return Err(Error::InvalidParameter(format!("genus {genus} not supported (max 16)")));
    }
    if resolution < 1 {
        return Err(Error::InvalidParameter(
            "resolution must be >= 1; the base triangulation has repeated edges".into(),
        ));
    }
    let predicted = predicted_vertex_count(genus, resolution);
    if predicted > budget || resolution > 12 {
        return Err(Error::Resource {
            vertices: predicted,
            budget,
        });
    }
    let domain = FundamentalDomain::regular(genus)?;
    let mut local = base_mesh(&domain);
    for _ in 0..resolution {
        local = refine(local);
    }
    let n = domain.sides();
    let np = local.points.len();

    // glue side k to side k + 2g
    let mut on_side: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (p, &mask) in local.sides.iter().enumerate() {
        for (s, list) in on_side.iter_mut().enumerate() {
            if mask & (1u64 << s) != 0 {
                list.push(p);
            }
        }
    }
    let mut parent: Vec<usize> = (0..np).collect();
    let mut links: Vec<Vec<(usize, Mobius)>> = vec![Vec::new(); np];
    for k in 0..2 * genus {
        let pairing = domain.side_pairings[k];
        let target = &on_side[k + 2 * genus];
        for &p in &on_side[k] {
            let image = pairing.apply(local.points[p]);
            let q = *target
                .iter()
                .min_by(|&&a, &&b| {
                    (local.points[a] - image)
                        .norm()
                        .total_cmp(&(local.points[b] - image).norm())
                })
                .expect("paired side has points");
            let gap = (local.points[q] - image).norm();
            if gap > MATCH_TOL {
                return Err(Error::MeshQuality {
                    face: usize::MAX,
                    reason: format!("side pairing {k} misses its target by {gap:e}"),
                });
            }
            links[p].push((q, pairing));
            links[q].push((p, pairing.inverse()));
            let (rp, rq) = (find(&mut parent, p), find(&mut parent, q));
            if rp != rq {
                parent[rp.max(rq)] = rp.min(rq);
            }
        }
    }

    // representatives are the smallest local index of each class
    let mut id_of = vec![usize::MAX; np];
    let mut vertices = Vec::new();
    for p in 0..np {
        if find(&mut parent, p) == p {
            id_of[p] = vertices.len();
            vertices.push(local.points[p]);
        }
    }
    let mut deck: Vec<Option<Mobius>> = vec![None; np];
    for p in 0..np {
        let r = find(&mut parent, p);
        id_of[p] = id_of[r];
        if r == p {
            deck[p] = Some(Mobius::IDENTITY);
            let mut queue = VecDeque::from([p]);
            while let Some(x) = queue.pop_front() {
                let gx = deck[x].unwrap();
                for &(y, map) in &links[x] {
                    if deck[y].is_none() {
                        deck[y] = Some(map.compose(&gx));
                        queue.push_back(y);
                    }
                }
            }
        }
    }
    let mut identifications = Vec::new();
    for p in 0..np {
        let r = find(&mut parent, p);
        if r != p {
            identifications.push(Identification {
                vertex: id_of[p],
                copy: local.points[p],
                map: deck[p].expect("class is connected"),
            });
        }
    }

    let faces: Vec<[usize; 3]> = local.faces.iter().map(|f| f.map(|p| id_of[p])).collect();
    let corner_positions: Vec<[C64; 3]> = local.faces.iter().map(|f| f.map(|p| local.points[p])).collect();
    let corner_rotations: Vec<[C64; 3]> = local
        .faces
        .iter()
        .map(|f| {
            f.map(|p| {
                let rep = vertices[id_of[p]];
                deck[p].unwrap().rotation_at(rep)
            })
        })
        .collect();
    SurfaceMesh::assemble(
        genus,
        resolution,
        domain,
        vertices,
        faces,
        corner_positions,
        corner_rotations,
        identifications,
    )
}

impl SurfaceMesh {
    /// Derives edges and metric weights from the combinatorial and chart data.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        genus: usize,
        resolution: usize,
        domain: FundamentalDomain,
        vertices: Vec<C64>,
        faces: Vec<[usize; 3]>,
        corner_positions: Vec<[C64; 3]>,
        corner_rotations: Vec<[C64; 3]>,
        identifications: Vec<Identification>,
    ) -> Result<Self> {
        let nv = vertices.len();
        let mut edge_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges = Vec::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for f in &faces {
            let mut fe = [(0usize, true); 3];
            for j in 0..3 {
                let (a, b) = (f[j], f[(j + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
                fe[j] = (e, a < b);
            }
            face_edges.push(fe);
        }
        let mut face_areas = Vec::with_capacity(faces.len());
        let mut face_angles = Vec::with_capacity(faces.len());
        let floor = MIN_ANGLE_DEG.to_radians() - 1e-9;
        for (fi, z) in corner_positions.iter().enumerate() {
            let ang = [
                disk::angle_at(z[0], z[1], z[2]),
                disk::angle_at(z[1], z[2], z[0]),
                disk::angle_at(z[2], z[0], z[1]),
            ];
            let area = PI - ang.iter().sum::<f64>();
            if !(area > MIN_FACE_AREA) {
                return Err(Error::MeshQuality {
                    face: fi,
                    reason: format!("area {area:e} below {MIN_FACE_AREA:e}"),
                });
            }
            if let Some(a) = ang.iter().find(|&&a| a < floor) {
                return Err(Error::MeshQuality {
                    face: fi,
                    reason: format!("angle {:.3} deg below {MIN_ANGLE_DEG} deg", a.to_degrees()),
                });
            }
            face_areas.push(area);
            face_angles.push(ang);
        }
        let mut edge_weights = vec![0.0; edges.len()];
        let mut vertex_areas = vec![0.0; nv];
        for (fi, f) in faces.iter().enumerate() {
            for j in 0..3 {
                // the angle at corner j+2 is opposite edge j
                let (e, _) = face_edges[fi][j];
                edge_weights[e] += 0.5 / face_angles[fi][(j + 2) % 3].tan();
            }
            let parts = dual_area_parts(&corner_positions[fi], &face_angles[fi], face_areas[fi]);
            for j in 0..3 {
                vertex_areas[f[j]] += parts[j];
            }
        }
        let mut trip = Vec::with_capacity(4 * edges.len());
        for (e, &[a, b]) in edges.iter().enumerate() {
            let w = edge_weights[e];
            trip.extend([(a, b, -w), (b, a, -w), (a, a, w), (b, b, w)]);
        }
        let stiffness = Csr::from_triplets(nv, nv, &trip);
        Ok(SurfaceMesh {
            genus,
            resolution,
            domain,
            vertices,
            faces,
            corner_positions,
            corner_rotations,
            identifications,
            edges,
            face_edges,
            face_areas,
            face_angles,
            edge_weights,
            vertex_areas,
            stiffness,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    pub fn exact_area(&self) -> f64 {
        4.0 * PI * (self.genus as f64 - 1.0)
    }

    /// Longest hyperbolic edge length; the mesh size `h`.
    pub fn mesh_size(&self) -> f64 {
        self.corner_positions
            .iter()
            .flat_map(|z| (0..3).map(move |j| disk::distance(z[j], z[(j + 1) % 3])))
            .fold(0.0, f64::max)
    }

    /// Euclidean centroid of a face in its chart.
    pub fn face_center(&self, f: usize) -> C64 {
        let z = &self.corner_positions[f];
        (z[0] + z[1] + z[2]) / 3.0
    }

    pub fn check_len(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.num_vertices() {
            return Err(Error::Shape {
                expected: self.num_vertices(),
                got: field.len(),
            });
        }
        Ok(())
    }

    /// FNV-1a digest of the exported text; stable across runs and platforms.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.export_text().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// Split of a triangle's area among its corners: circumcentric (Voronoi)
/// parts from hyperbolic lengths and angles, with the usual fallback for
/// obtuse triangles, rescaled to the exact area.
fn dual_area_parts(z: &[C64; 3], angles: &[f64; 3], area: f64) -> [f64; 3] {
    if let Some(obtuse) = (0..3).find(|&j| angles[j] > 0.5 * PI) {
        return std::array::from_fn(|j| if j == obtuse { 0.5 * area } else { 0.25 * area });
    }
    let len2 = |a: usize, b: usize| disk::distance(z[a], z[b]).powi(2);
    let parts: [f64; 3] = std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        (len2(i, j) / angles[k].tan() + len2(i, k) / angles[j].tan()) / 8.0
    });
    let s: f64 = parts.iter().sum();
    parts.map(|p| p * area / s)
}

/// Discrete Laplace–Beltrami operator `Δ = -M⁻¹K` with `K` the cotangent
/// stiffness and `M` the dual vertex areas.
#[derive(Clone, Debug)]
pub struct Laplacian {
    pub stiffness: Csr,
    pub mass: Vec<f64>,
}

impl Laplacian {
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness
            .matvec(u)
            .iter()
            .zip(&self.mass)
            .map(|(k, m)| -k / m)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }
}

pub fn laplacian(mesh: &SurfaceMesh) -> Laplacian {
    Laplacian {
        stiffness: mesh.stiffness.clone(),
        mass: mesh.vertex_areas.clone(),
    }
}

/// Lumped quadrature of `field` against `v_h`, or against `e^{2u} v_h` when `u` is given.
pub fn integrate(mesh: &SurfaceMesh, field: &[f64], conformal_factor: Option<&[f64]>) -> Result<f64> {
    mesh.check_len(field)?;
    match conformal_factor {
        None => Ok(field.iter().zip(&mesh.vertex_areas).map(|(f, a)| f * a).sum()),
        Some(u) => {
            mesh.check_len(u)?;
            Ok(field
                .iter()
                .zip(u)
                .zip(&mesh.vertex_areas)
                .map(|((f, u), a)| f * (2.0 * u).exp() * a)
                .sum())
        }
    }
}

fn fmt_c(z: C64) -> String {
    format!("{:.16e} {:.16e}", z.re, z.im)
}

impl SurfaceMesh {
    /// Line-oriented text export; all floats carry 17 significant digits.
    pub fn export_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "hypmesh 1");
        let _ = writeln!(s, "genus {}", self.genus);
        let _ = writeln!(s, "resolution {}", self.resolution);
        let _ = writeln!(s, "polygon {}", self.domain.polygon_vertices.len());
        for z in &self.domain.polygon_vertices {
            let _ = writeln!(s, "{}", fmt_c(*z));
        }
        let _ = writeln!(s, "pairings {}", self.domain.side_pairings.len());
        for m in &self.domain.side_pairings {
            let _ = writeln!(s, "{} {}", fmt_c(m.a), fmt_c(m.b));
        }
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for z in &self.vertices {
            let _ = writeln!(s, "{}", fmt_c(*z));
        }
        let _ = writeln!(s, "faces {}", self.faces.len());
        for (f, (z, r)) in self.faces.iter().zip(self.corner_positions.iter().zip(&self.corner_rotations)) {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {} {} {} {}",
                f[0],
                f[1],
                f[2],
                fmt_c(z[0]),
                fmt_c(z[1]),
                fmt_c(z[2]),
                fmt_c(r[0]),
                fmt_c(r[1]),
                fmt_c(r[2])
            );
        }
        let _ = writeln!(s, "identifications {}", self.identifications.len());
        for id in &self.identifications {
            let _ = writeln!(s, "{} {} {} {}", id.vertex, fmt_c(id.copy), fmt_c(id.map.a), fmt_c(id.map.b));
        }
        s
    }

    pub fn import_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut next = |expect: &str| -> Result<(usize, Vec<String>)> {
            let (i, line) = lines.next().ok_or(Error::Parse {
                line: 0,
                message: format!("unexpected end of input, wanted {expect}"),
            })?;
            Ok((i + 1, line.split_whitespace().map(str::to_owned).collect()))
        };
        fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad number {s:?}"),
            })
        }
        fn header(line: usize, toks: &[String], key: &str) -> Result<usize> {
            if toks.len() != 2 || toks[0] != key {
                return Err(Error::Parse {
                    line,
                    message: format!("expected `{key} <n>`"),
                });
            }
            num(line, &toks[1])
        }
        fn complexes(line: usize, toks: &[String], count: usize) -> Result<Vec<C64>> {
            if toks.len() != 2 * count {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} numbers, got {}", 2 * count, toks.len()),
                });
            }
            (0..count)
                .map(|k| Ok(C64::new(num(line, &toks[2 * k])?, num(line, &toks[2 * k + 1])?)))
                .collect()
        }
        let (i, t) = next("magic")?;
        if t != ["hypmesh", "1"] {
            return Err(Error::Parse {
                line: i,
                message: "missing `hypmesh 1` header".into(),
            });
        }
        let (i, t) = next("genus")?;
        let genus = header(i, &t, "genus")?;
        let (i, t) = next("resolution")?;
        let resolution = header(i, &t, "resolution")?;
        let (i, t) = next("polygon")?;
        let np = header(i, &t, "polygon")?;
        let mut polygon_vertices = Vec::with_capacity(np);
        for _ in 0..np {
            let (i, t) = next("polygon vertex")?;
            polygon_vertices.push(complexes(i, &t, 1)?[0]);
        }
        let (i, t) = next("pairings")?;
        let npair = header(i, &t, "pairings")?;
        let mut side_pairings = Vec::with_capacity(npair);
        for _ in 0..npair {
            let (i, t) = next("pairing")?;
            let c = complexes(i, &t, 2)?;
            side_pairings.push(Mobius { a: c[0], b: c[1] });
        }
        let (i, t) = next("vertices")?;
        let nv = header(i, &t, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (i, t) = next("vertex")?;
            vertices.push(complexes(i, &t, 1)?[0]);
        }
        let (i, t) = next("faces")?;
        let nf = header(i, &t, "faces")?;
        let mut faces = Vec::with_capacity(nf);
        let mut corner_positions = Vec::with_capacity(nf);
        let mut corner_rotations = Vec::with_capacity(nf);
        for _ in 0..nf {
            let (i, t) = next("face")?;
            if t.len() != 15 {
                return Err(Error::Parse {
                    line: i,
                    message: "face lines carry 3 indices and 6 complex numbers".into(),
                });
            }
            let f = [num(i, &t[0])?, num(i, &t[1])?, num(i, &t[2])?];
            if f.iter().any(|&v: &usize| v >= nv) {
                return Err(Error::Parse {
                    line: i,
                    message: "vertex index out of range".into(),
                });
            }
            let c = complexes(i, &t[3..], 6)?;
            faces.push(f);
            corner_positions.push([c[0], c[1], c[2]]);
            corner_rotations.push([c[3], c[4], c[5]]);
        }
        let (i, t) = next("identifications")?;
        let ni = header(i, &t, "identifications")?;
        let mut identifications = Vec::with_capacity(ni);
        for _ in 0..ni {
            let (i, t) = next("identification")?;
            if t.len() != 7 {
                return Err(Error::Parse {
                    line: i,
                    message: "identification lines carry an index and 3 complex numbers".into(),
                });
            }
            let c = complexes(i, &t[1..], 3)?;
            identifications.push(Identification {
                vertex: num(i, &t[0])?,
                copy: c[0],
                map: Mobius { a: c[1], b: c[2] },
            });
        }
        let domain = FundamentalDomain {
            genus,
            polygon_vertices,
            side_pairings,
        };
        SurfaceMesh::assemble(
            genus,
            resolution,
            domain,
            vertices,
            faces,
            corner_positions,
            corner_rotations,
            identifications,
        )
    }
}
