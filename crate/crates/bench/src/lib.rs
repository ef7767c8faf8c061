//! Benchmark bodies for the codec, the range coder and streamed refinement.

use criterion::{black_box, BenchmarkId, Criterion, Throughput};
use dgpc::arith::{uniform_table, Decoder, Encoder, FreqTable};
use dgpc::generate::{DatasetSpec, Generator};
use dgpc::stream::{ClientSession, RefineRequest, ServerSession};
use dgpc::{decode, encode, BoundsSpec, CodecConfig, QuantizedPointSet};

pub fn dataset(generator: Generator, n: usize, bits: &[u8]) -> QuantizedPointSet {
    DatasetSpec::new(generator, n, BoundsSpec::new(bits).unwrap(), 7).generate().unwrap()
}

pub fn codec(c: &mut Criterion) {
    let mut group = c.benchmark_group("codec");
    for n in [1usize << 12, 1 << 16] {
        for (name, prediction) in [("plain", false), ("prediction", true)] {
            let set = dataset(Generator::Uniform, n, &[16, 16]);
            let config = CodecConfig::default().with_prediction(prediction);
            let bytes = encode(&set, &config).unwrap();
            group.throughput(Throughput::Elements(n as u64));
            group.bench_with_input(BenchmarkId::new(format!("encode/{name}"), n), &set, |b, s| {
                b.iter(|| encode(black_box(s), &config).unwrap())
            });
            group.bench_with_input(BenchmarkId::new(format!("decode/{name}"), n), &bytes, |b, s| {
                b.iter(|| decode(black_box(s)).unwrap())
            });
        }
    }
    group.finish();
}

pub fn range_coder(c: &mut Criterion) {
    const SYMBOLS: u32 = 1 << 16;
    let mut group = c.benchmark_group("range_coder");
    group.throughput(Throughput::Elements(u64::from(SYMBOLS)));
    let skewed = FreqTable::from_freqs(&[40, 20, 10, 5, 3, 1, 1]).unwrap();
    for (name, table) in [("uniform-257", uniform_table(257).unwrap()), ("skewed-7", skewed)] {
        let symbols: Vec<u32> = (0..SYMBOLS).map(|i| i.wrapping_mul(2_654_435_761) % table.len()).collect();
        let mut enc = Encoder::new();
        for &s in &symbols {
            enc.encode(&table, s).unwrap();
        }
        let bytes = enc.finish();
        group.bench_function(BenchmarkId::new("encode", name), |b| {
            b.iter(|| {
                let mut enc = Encoder::new();
                for &s in &symbols {
                    enc.encode(&table, s).unwrap();
                }
                enc.finish()
            })
        });
        group.bench_function(BenchmarkId::new("decode", name), |b| {
            b.iter(|| {
                let mut dec = Decoder::new(&bytes).unwrap();
                for _ in 0..SYMBOLS {
                    black_box(dec.decode(&table).unwrap());
                }
            })
        });
    }
    group.finish();
}

pub fn refinement(c: &mut Criterion) {
    let set = dataset(Generator::mixture(), 1 << 14, &[12, 12]);
    let config = CodecConfig::default();
    let quadrant = RefineRequest::new(vec![0, 0], vec![2047, 2047], 24);
    c.bench_function("refinement/quadrant", |b| {
        b.iter(|| {
            let mut server = ServerSession::new(&set, &config).unwrap();
            let mut client = ClientSession::from_header_bytes(&server.header_bytes()).unwrap();
            client.apply_batch(&server.refine(&RefineRequest::whole(set.bounds(), 4)).unwrap()).unwrap();
            client.apply_batch(&server.refine(&quadrant).unwrap()).unwrap();
            client.refinable()
        })
    });
}
