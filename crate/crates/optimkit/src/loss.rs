use diffrast_core::{ImageGrid, Real};

use crate::error::{shape, Result};

/// `L = sum (x - y)^2` and `dL/dx = 2 (x - y)`.
pub fn l2_image_loss<T: Real>(render: &ImageGrid<T>, reference: &ImageGrid<T>) -> Result<(f64, ImageGrid<T>)> {
    if !render.same_shape(reference) {
        return Err(shape("reference image", render.data().len(), reference.data().len()));
    }
    let mut loss = 0.0;
    let two = T::lit(2.0);
    let grad: Vec<T> = render
        .data()
        .iter()
        .zip(reference.data())
        .map(|(&x, &y)| {
            let d = x - y;
            loss += d.as_f64() * d.as_f64();
            two * d
        })
        .collect();
    let g = ImageGrid::from_data(render.width(), render.height(), render.channels(), grad)
        .expect("same shape as render");
    Ok((loss, g))
}
