//! Core data model shared by all primitives.
//!
//! Buffers are immutable after construction. [`GradBuffer`] is the single
//! mutable sink used by backward passes.

use std::collections::HashMap;

use crate::{Error, Real, Result};

/// Homogeneous clip-space vertex positions `(x_c, y_c, z_c, w_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipVertexBuffer<T> {
    positions: Vec<[T; 4]>,
}

impl<T: Real> ClipVertexBuffer<T> {
    pub fn new(positions: Vec<[T; 4]>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::shape("clip vertex count", 1, 0));
        }
        if let Some(vertex) = positions
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::NonFiniteVertex { vertex });
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[[T; 4]] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Triangle list of vertex indices.
///
/// Positions and attributes may be addressed by different index buffers as
/// long as both have the same triangle count.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexBuffer {
    triangles: Vec<[u32; 3]>,
}

impl IndexBuffer {
    pub fn new(triangles: Vec<[u32; 3]>) -> Self {
        Self { triangles }
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Checks a geometry index buffer: every index addresses one of
    /// `vertex_count` vertices and no triangle repeats a vertex.
    pub fn validate(&self, vertex_count: usize) -> Result<()> {
        self.validate_range(vertex_count)?;
        match self
            .triangles
            .iter()
            .position(|t| t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
        {
            Some(tri) => Err(Error::DegenerateIndexTriple { tri }),
            None => Ok(()),
        }
    }

    /// Range check only; attribute index buffers may repeat an entry, e.g.
    /// one flat color per triangle.
    pub fn validate_range(&self, count: usize) -> Result<()> {
        for (tri, t) in self.triangles.iter().enumerate() {
            if let Some(slot) = t.iter().position(|&i| i as usize >= count) {
                return Err(Error::IndexOutOfRange { tri, slot });
            }
        }
        Ok(())
    }
}

/// Per-vertex attribute vectors with `channels` scalars each.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSet<T> {
    channels: usize,
    values: Vec<T>,
}

impl<T: Real> AttributeSet<T> {
    pub fn new(channels: usize, values: Vec<T>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::shape("attribute channels", 1, 0));
        }
        if values.len() % channels != 0 {
            return Err(Error::shape(
                "attribute values",
                values.len().next_multiple_of(channels),
                values.len(),
            ));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteAttribute { index });
        }
        Ok(Self { channels, values })
    }

    pub fn from_rows<const K: usize>(rows: &[[T; K]]) -> Result<Self> {
        Self::new(K, rows.iter().flatten().copied().collect())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.channels..(i + 1) * self.channels]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Dense row-major image with `channels` scalars per pixel.
///
/// Pixel `(x, y)` has its center at `(x + 0.5, y + 0.5)` in screen units;
/// row 0 is the top of the image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid<T> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Real> ImageGrid<T> {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, T::zero())
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: T) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyViewport);
        }
        if data.len() != width * height * channels {
            return Err(Error::shape(
                "image data",
                width * height * channels,
                data.len(),
            ));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn pixel(&self, index: usize) -> &[T] {
        &self.data[index * self.channels..(index + 1) * self.channels]
    }

    pub fn pixel_mut(&mut self, index: usize) -> &mut [T] {
        &mut self.data[index * self.channels..(index + 1) * self.channels]
    }

    pub fn at(&self, x: usize, y: usize) -> &[T] {
        self.pixel(y * self.width + x)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn check_dims(&self, what: &'static str, width: usize, height: usize) -> Result<()> {
        if self.width != width {
            return Err(Error::shape(what, width, self.width));
        }
        if self.height != height {
            return Err(Error::shape(what, height, self.height));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Zero-initialized gradient accumulator shadowing a `rows x cols` buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct GradBuffer<T> {
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> GradBuffer<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        if self.cols == 0 {
            0
        } else {
            self.data.len() / self.cols
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn accumulate(&mut self, row: usize, values: &[T]) {
        debug_assert_eq!(values.len(), self.cols);
        for (d, &v) in self.data[row * self.cols..(row + 1) * self.cols]
            .iter_mut()
            .zip(values)
        {
            *d += v;
        }
    }

    pub fn add_at(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.cols + col] += value;
    }

    /// Adds another accumulator of the same shape.
    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (d, &v) in self.data.iter_mut().zip(&other.data) {
            *d += v;
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == T::zero())
    }
}

impl<T: Real> GradBuffer<T> {
    pub fn to_vec4(&self) -> Vec<[T; 4]> {
        assert_eq!(self.cols, 4);
        self.data
            .chunks_exact(4)
            .map(|c| [c[0], c[1], c[2], c[3]])
            .collect()
    }
}

/// Checks that `idx` addresses `verts` and that every position is finite.
pub fn validate_geometry<T: Real>(verts: &ClipVertexBuffer<T>, idx: &IndexBuffer) -> Result<()> {
    if let Some(vertex) = verts
        .positions()
        .iter()
        .position(|p| p.iter().any(|c| !c.is_finite()))
    {
        return Err(Error::NonFiniteVertex { vertex });
    }
    idx.validate(verts.len())
}

/// Incident triangles (0-based) of every undirected edge.
#[derive(Debug, Clone, Default)]
pub struct EdgeAdjacency {
    edges: HashMap<(u32, u32), Vec<u32>>,
}

#[inline]
fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl EdgeAdjacency {
    /// Triangles incident to edge `{a, b}`, in ascending triangle order.
    pub fn incident(&self, a: u32, b: u32) -> &[u32] {
        self.edges
            .get(&edge_key(a, b))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = ((u32, u32), &[u32])> {
        self.edges.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// Sorted one-ring neighbor lists for `vertex_count` vertices.
    pub fn one_rings(&self, vertex_count: usize) -> Vec<Vec<u32>> {
        let mut rings = vec![Vec::new(); vertex_count];
        for &(a, b) in self.edges.keys() {
            rings[a as usize].push(b);
            rings[b as usize].push(a);
        }
        for ring in &mut rings {
            ring.sort_unstable();
            ring.dedup();
        }
        rings
    }
}

/// Builds the undirected edge to incident-triangle map of a validated index
/// buffer. Non-manifold edges keep all of their triangles.
pub fn build_edge_adjacency(idx: &IndexBuffer) -> EdgeAdjacency {
    let mut edges: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for (t, tri) in idx.triangles().iter().enumerate() {
        for k in 0..3 {
            let key = edge_key(tri[k], tri[(k + 1) % 3]);
            edges.entry(key).or_default().push(t as u32);
        }
    }
    EdgeAdjacency { edges }
}
