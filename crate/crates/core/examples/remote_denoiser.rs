//! A denoiser behind HTTP: a tiny server exposing an oracle, and the client side.

use std::thread;

use dvote::denoiser::{serve_check, LogitsRequest, LogitsResponse};
use dvote::harness::SyntheticParams;
use dvote::prelude::*;
use tiny_http::{Header, Response, Server};

fn serve(oracle: MarkovOracle) -> String {
    let server = Server::http("127.0.0.1:0").expect("bind");
    let url = format!("http://{}", server.server_addr().to_ip().expect("tcp"));
    thread::spawn(move || {
        for mut req in server.incoming_requests() {
            let mut body = String::new();
            let reply = req
                .as_reader()
                .read_to_string(&mut body)
                .map_err(|e| e.to_string())
                .and_then(|_| {
                    serde_json::from_str::<LogitsRequest>(&body).map_err(|e| e.to_string())
                })
                .and_then(|r| {
                    LogitsResponse::from_denoiser(&oracle, &r).map_err(|e| e.to_string())
                });
            let resp = match reply {
                Ok(r) => Response::from_string(serde_json::to_string(&r).unwrap())
                    .with_header(Header::from_bytes("content-type", "application/json").unwrap()),
                Err(e) => Response::from_string(e).with_status_code(400),
            };
            let _ = req.respond(resp);
        }
    });
    url
}

fn main() -> Result<()> {
    let task = SyntheticParams {
        vocab: 24,
        gen_len: 16,
        gold: 5,
        decoy: 1,
        answer_mass: 0.6,
        smoothing: 0.02,
        seed: 3,
    };
    let url = serve(MarkovOracle::new(task.chain()?)?);
    let vocab = VocabSpec::new(task.vocab)?;
    let check = serve_check(&url, vocab)?;
    println!("{} passed {} protocol probes", check.endpoint, check.probes);

    let remote = RemoteDenoiser::new(&url, vocab);
    let cfg = GenerationConfig::for_length(16);
    let schedule = make_schedule(cfg.gen_len, cfg.block_size);
    let run = dvoting_run(
        &task.prompt(),
        &cfg,
        &ConsistencyParams::default(),
        &remote,
        &schedule,
        &task.extractor(),
    )?;
    println!(
        "remote run: answer {} (gold {}) in {} forward calls over {} samples",
        run.final_answer.display(),
        task.gold,
        run.steps.forwards(),
        run.samples_used
    );
    Ok(())
}
