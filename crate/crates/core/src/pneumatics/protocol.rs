use super::PneumaticSystem;
use crate::sim::{PRESSURE_MAX, PRESSURE_MIN};

/// One line of the serial command grammar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Set { bubble: usize, hpa: f64 },
    Get { bubble: usize },
    Vent { bubble: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorReason {
    Parse,
    Range,
    Bubble,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Response {
    Ok,
    Pressure { bubble: usize, hpa: f64 },
    Err(ErrorReason),
}

/// Parses exactly `SET <id> <hPa>`, `GET <id>` or `VENT <id>`, newline optional.
/// Tokens are separated by single spaces.
pub fn parse_command(line: &str) -> Result<Command, ErrorReason> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let tokens: Vec<&str> = line.split(' ').collect();
    let id = |s: &str| -> Result<usize, ErrorReason> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ErrorReason::Parse);
        }
        s.parse().map_err(|_| ErrorReason::Parse)
    };
    match tokens.as_slice() {
        ["SET", b, p] => {
            let bubble = id(b)?;
            let hpa: f64 = p.parse().map_err(|_| ErrorReason::Parse)?;
            if !hpa.is_finite() {
                return Err(ErrorReason::Parse);
            }
            if !(PRESSURE_MIN..=PRESSURE_MAX).contains(&hpa) {
                return Err(ErrorReason::Range);
            }
            Ok(Command::Set { bubble, hpa })
        }
        ["GET", b] => Ok(Command::Get { bubble: id(b)? }),
        ["VENT", b] => Ok(Command::Vent { bubble: id(b)? }),
        _ => Err(ErrorReason::Parse),
    }
}

pub fn format_response(response: &Response) -> String {
    match response {
        Response::Ok => "OK".into(),
        Response::Pressure { bubble, hpa } => format!("P {bubble} {hpa:.1}"),
        Response::Err(ErrorReason::Parse) => "ERR parse".into(),
        Response::Err(ErrorReason::Range) => "ERR range".into(),
        Response::Err(ErrorReason::Bubble) => "ERR bubble".into(),
    }
}

/// Applies protocol commands to a simulated pneumatic system.
#[derive(Debug, Clone)]
pub struct CommandConsole {
    pub system: PneumaticSystem,
}

impl CommandConsole {
    pub fn new(system: PneumaticSystem) -> Self {
        Self { system }
    }

    pub fn handle(&mut self, line: &str) -> Response {
        let command = match parse_command(line) {
            Ok(c) => c,
            Err(e) => return Response::Err(e),
        };
        match command {
            Command::Set { bubble, hpa } => match self.system.channel_mut(bubble) {
                Ok(ch) => match ch.controller.set_setpoint(hpa) {
                    Ok(()) => Response::Ok,
                    Err(_) => Response::Err(ErrorReason::Range),
                },
                Err(_) => Response::Err(ErrorReason::Bubble),
            },
            Command::Get { bubble } => match self.system.channel(bubble) {
                Ok(ch) => Response::Pressure { bubble, hpa: ch.estimate() },
                Err(_) => Response::Err(ErrorReason::Bubble),
            },
            Command::Vent { bubble } => match self.system.channel_mut(bubble) {
                Ok(ch) => {
                    ch.controller.vent();
                    Response::Ok
                }
                Err(_) => Response::Err(ErrorReason::Bubble),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pneumatics::{ControllerConfig, PlantConfig};

    #[test]
    fn grammar_is_strict() {
        assert_eq!(parse_command("SET 0 1060\n"), Ok(Command::Set { bubble: 0, hpa: 1060.0 }));
        assert_eq!(parse_command("GET 1"), Ok(Command::Get { bubble: 1 }));
        assert_eq!(parse_command("VENT 0\n"), Ok(Command::Vent { bubble: 0 }));
        for bad in ["set 0 1060", "SET  0 1060", "SET 0", "GET -1", "GET 0 1", "", "SET 0 abc", "SET 0 NaN", "GET +1"] {
            assert_eq!(parse_command(bad), Err(ErrorReason::Parse), "{bad:?}");
        }
        assert_eq!(parse_command("SET 0 1200"), Err(ErrorReason::Range));
    }

    #[test]
    fn console_responses() {
        let sys = PneumaticSystem::new(2, PlantConfig::default().noiseless(), ControllerConfig::default(), 1050.0, 0).unwrap();
        let mut con = CommandConsole::new(sys);
        assert_eq!(format_response(&con.handle("GET 0\n")), "P 0 1050.0");
        assert_eq!(format_response(&con.handle("SET 1 1070\n")), "OK");
        assert_eq!(format_response(&con.handle("SET 2 1070\n")), "ERR bubble");
        assert_eq!(format_response(&con.handle("SET 0 900\n")), "ERR range");
        assert_eq!(format_response(&con.handle("bogus\n")), "ERR parse");
        assert_eq!(format_response(&con.handle("VENT 0\n")), "OK");
        con.system.advance(10.0);
        assert!(con.system.channel(0).unwrap().true_pressure() < 1015.0);
        assert!(con.system.channel(1).unwrap().true_pressure() > 1055.0);
    }
}
