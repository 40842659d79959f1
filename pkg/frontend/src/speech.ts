/** Optional browser speech capture. When the recognition API exists, its
 * transcript and confidence feed the same utterance pipeline typed text
 * uses; when it does not, the UI simply hides the mic button. */

export interface SpeechResult {
  text: string;
  confidence: number;
}

export interface SpeechCapture {
  readonly supported: boolean;
  capture(lang: string): Promise<SpeechResult>;
}

interface RecognitionLike {
  lang: string;
  maxAlternatives: number;
  onresult: ((event: any) => void) | null;
  onerror: ((event: any) => void) | null;
  start(): void;
}

type RecognitionCtor = new () => RecognitionLike;

export function speechCapture(host: Record<string, unknown> = globalThis as never): SpeechCapture {
  const ctor = (host.SpeechRecognition ?? host.webkitSpeechRecognition) as
    | RecognitionCtor
    | undefined;
  if (!ctor) {
    return {
      supported: false,
      capture: () => Promise.reject(new Error("speech recognition unavailable")),
    };
  }
  return {
    supported: true,
    capture(lang: string) {
      return new Promise<SpeechResult>((resolve, reject) => {
        const recognizer = new ctor();
        recognizer.lang = lang;
        recognizer.maxAlternatives = 1;
        recognizer.onresult = (event) => {
          const alternative = event.results?.[0]?.[0];
          resolve({
            text: String(alternative?.transcript ?? ""),
            confidence: Number(alternative?.confidence ?? 1.0),
          });
        };
        recognizer.onerror = (event) => reject(new Error(String(event?.error ?? "speech error")));
        recognizer.start();
      });
    },
  };
}
