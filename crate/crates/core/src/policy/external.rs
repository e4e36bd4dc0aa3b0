use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::protocol::{self, AgentState, Request, Response, PROTOCOL_VERSION};
use super::{ActionMap, BehaviorAction, Policy, StepContext};
use crate::error::ProtocolError;
use crate::metrics::EpisodeSummary;
use crate::world::World;

/// Line-oriented duplex channel to an external policy.
pub trait Transport {
    fn send(&mut self, line: &str) -> Result<(), ProtocolError>;
    fn recv(&mut self) -> Result<String, ProtocolError>;
}

impl<T: Transport + ?Sized> Transport for &mut T {
    fn send(&mut self, line: &str) -> Result<(), ProtocolError> {
        (**self).send(line)
    }

    fn recv(&mut self) -> Result<String, ProtocolError> {
        (**self).recv()
    }
}

/// Child process driven over its stdin/stdout.
pub struct ChildTransport {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl ChildTransport {
    /// Starts `command` through `sh -c`.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, ProtocolError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().ok_or(ProtocolError::Closed)?;
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines: rx,
            timeout,
        })
    }
}

impl Transport for ChildTransport {
    fn send(&mut self, line: &str) -> Result<(), ProtocolError> {
        let stdin = self.stdin.as_mut().ok_or(ProtocolError::Closed)?;
        writeln!(stdin, "{line}").map_err(|e| match e.kind() {
            std::io::ErrorKind::BrokenPipe => ProtocolError::Closed,
            _ => ProtocolError::Io(e),
        })?;
        stdin.flush()?;
        Ok(())
    }

    fn recv(&mut self) -> Result<String, ProtocolError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(ProtocolError::Io(e)),
            Err(RecvTimeoutError::Timeout) => Err(ProtocolError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(ProtocolError::Closed),
        }
    }
}

impl Drop for ChildTransport {
    fn drop(&mut self) {
        // closing stdin lets a well-behaved responder exit on its own
        drop(self.stdin.take());
        for _ in 0..50 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Policy answered by an external process over the line protocol.
pub struct ExternalPolicy<T: Transport> {
    transport: T,
    warnings: u64,
}

impl<T: Transport> ExternalPolicy<T> {
    pub fn new(transport: T) -> Self {
        Self {
            transport,
            warnings: 0,
        }
    }

    fn request(&mut self, req: &Request) -> Result<(), ProtocolError> {
        self.transport.send(&protocol::encode(req)?)
    }

    fn response(&mut self) -> Result<Response, ProtocolError> {
        protocol::decode(&self.transport.recv()?)
    }
}

impl<T: Transport> Policy for ExternalPolicy<T> {
    fn begin(&mut self, world: &World, seed: u64) -> Result<(), ProtocolError> {
        self.request(&Request::Hello {
            protocol: PROTOCOL_VERSION,
            seed,
            scenario: world.scenario.clone(),
            shield: world.shield.mode,
            actions: BehaviorAction::ALL.to_vec(),
        })?;
        match self.response()? {
            Response::HelloAck { protocol } if protocol == PROTOCOL_VERSION => Ok(()),
            Response::HelloAck { protocol } => Err(ProtocolError::Handshake(format!(
                "protocol {protocol} is not supported (expected {PROTOCOL_VERSION})"
            ))),
            other => Err(ProtocolError::Handshake(format!(
                "expected hello_ack, got {other:?}"
            ))),
        }
    }

    fn act(&mut self, ctx: &StepContext<'_>) -> Result<ActionMap, ProtocolError> {
        let world = ctx.world;
        let width = world.scenario.perception_n + 1;
        let agents = world
            .vehicles
            .iter()
            .map(|v| AgentState {
                id: v.id,
                observation: if v.on_road() {
                    world.observe(v).rows
                } else {
                    vec![[0.0; 5]; width]
                },
                reward: ctx.rewards.get(&v.id).copied().unwrap_or(0.0),
                done: !v.is_live(),
            })
            .collect();
        self.request(&Request::Step {
            step: ctx.step,
            agents,
        })?;
        match self.response()? {
            Response::Actions { step, actions } if step == ctx.step => {
                let (map, warnings) = protocol::resolve_actions(world.live().map(|v| v.id), &actions);
                self.warnings += warnings;
                Ok(map)
            }
            Response::Actions { step, .. } => Err(ProtocolError::StepMismatch {
                expected: ctx.step,
                got: step,
            }),
            other => Err(ProtocolError::Malformed(format!(
                "expected actions for step {}, got {other:?}",
                ctx.step
            ))),
        }
    }

    fn end(&mut self, summary: &EpisodeSummary) -> Result<(), ProtocolError> {
        self.request(&Request::EpisodeEnd {
            summary: summary.clone(),
        })
    }

    fn warnings(&self) -> u64 {
        self.warnings
    }
}
