use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::latent::{decode, encode, Latent};
use super::net::VelocityNet;
use crate::error::{check_unit, Error, Result};
use crate::image::ImageBuffer;

/// Euler integration of the learned flow from seeded noise, in latent space.
///
/// `z ← z + v(z, cond, k/steps, s) / steps` for `k = 0..steps`.
pub fn sample_latent(net: &VelocityNet, cond: &Latent, s: f64, steps: usize, seed: u64) -> Result<Latent> {
    check_unit("strength", s)?;
    if steps == 0 {
        return Err(Error::Config("sampler needs at least one step".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = Latent::noise(cond.height, cond.width, &mut rng);
    let dt = 1.0 / steps as f64;
    for k in 0..steps {
        let v = net.forward(&z, cond, k as f64 * dt, s)?;
        for (zi, vi) in z.data.iter_mut().zip(&v.data) {
            *zi += dt * vi;
        }
    }
    Ok(z)
}

/// Enhances `input` at strength `s`; returns a linear RGB image.
pub fn sample(net: &VelocityNet, input: &ImageBuffer, s: f64, steps: usize, seed: u64) -> Result<ImageBuffer> {
    let cond = encode(input)?;
    Ok(decode(&sample_latent(net, &cond, s, steps, seed)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::latent::LatentOrigin;
    use crate::flow::net::NetDims;
    use crate::flow::train::initial_net;
    use crate::flow::TrainConfig;

    fn constant_velocity(c: [f64; 3]) -> VelocityNet {
        let mut net = VelocityNet::zeros(NetDims::new(4, 1));
        net.output.bias = c.to_vec();
        net
    }

    #[test]
    fn constant_velocity_telescopes() {
        let c = [0.3, -0.2, 0.5];
        let net = constant_velocity(c);
        let cond = Latent::filled(2, 3, LatentOrigin::Encoded, 0.0);
        let start = {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            Latent::noise(2, 3, &mut rng)
        };
        for steps in [1, 7, 20] {
            let z = sample_latent(&net, &cond, 0.5, steps, 11).unwrap();
            for (i, (&zf, &z0)) in z.data.iter().zip(&start.data).enumerate() {
                assert!((zf - (z0 + c[i % 3])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_step_is_one_euler_update() {
        let net = initial_net(&TrainConfig::default());
        let cond = Latent::filled(2, 2, LatentOrigin::Encoded, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z0 = Latent::noise(2, 2, &mut rng);
        let v = net.forward(&z0, &cond, 0.0, 0.3).unwrap();
        let z = sample_latent(&net, &cond, 0.3, 1, 5).unwrap();
        for i in 0..z.data.len() {
            assert_eq!(z.data[i], z0.data[i] + v.data[i]);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let net = initial_net(&TrainConfig::default());
        let img = ImageBuffer::filled(16, 16, 3, crate::image::ColorSpace::Srgb, 0.2);
        let a = sample(&net, &img, 0.7, 5, 42).unwrap();
        let b = sample(&net, &img, 0.7, 5, 42).unwrap();
        assert_eq!(a, b);
        assert!(sample(&net, &img, 0.7, 0, 42).is_err());
    }
}
